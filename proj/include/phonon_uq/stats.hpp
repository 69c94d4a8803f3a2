#pragma once

#include "phonon_uq/errors.hpp"
#include "phonon_uq/pce.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace phonon_uq {

inline double sample_mean(const std::vector<double>& x)
{
    if (x.empty()) throw InvalidArgument("mean of an empty sample");
    return pairwise_sum(x) / static_cast<double>(x.size());
}

/// Unbiased (n - 1) standard deviation; 0 for a single value.
inline double sample_std(const std::vector<double>& x)
{
    if (x.size() < 2) return 0.0;
    const double m = sample_mean(x);
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) sq[i] = (x[i] - m) * (x[i] - m);
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(x.size() - 1));
}

/// Linear-interpolated quantile of a sorted sample (type 7).
inline double sorted_quantile(const std::vector<double>& sorted, double q)
{
    if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct KDEModel {
    std::vector<double> samples;
    double bandwidth = 0.0;

    double density(double x) const
    {
        const double norm = 1.0 / (static_cast<double>(samples.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
        std::vector<double> terms(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double z = (x - samples[i]) / bandwidth;
            terms[i] = std::exp(-0.5 * z * z);
        }
        return norm * pairwise_sum(terms);
    }
};

struct BandwidthRule {
    enum class Kind { silverman, fixed };
    Kind kind = Kind::silverman;
    double h = 0.0;

    static BandwidthRule silverman() { return {Kind::silverman, 0.0}; }
    static BandwidthRule fixed(double h) { return {Kind::fixed, h}; }
};

/// h = 0.9 min(sd, IQR / 1.34) n^(-1/5).
inline double silverman_bandwidth(const std::vector<double>& samples)
{
    std::vector<double> s = samples;
    std::sort(s.begin(), s.end());
    const double sd = sample_std(s);
    const double iqr = sorted_quantile(s, 0.75) - sorted_quantile(s, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0)) spread = sd; // IQR can vanish for clustered data while sd does not
    return 0.9 * spread * std::pow(static_cast<double>(s.size()), -0.2);
}

inline KDEModel kde_fit(const std::vector<double>& samples, BandwidthRule rule = BandwidthRule::silverman())
{
    if (samples.size() < 2) throw InvalidArgument("kernel density estimate needs at least two samples");
    KDEModel m{samples, 0.0};
    if (rule.kind == BandwidthRule::Kind::fixed) {
        if (!(rule.h > 0)) throw InvalidArgument("fixed bandwidth must be positive");
        m.bandwidth = rule.h;
    } else {
        m.bandwidth = silverman_bandwidth(samples);
        if (!(m.bandwidth > 0))
            throw InvalidArgument("samples have zero spread; Silverman bandwidth undefined (use a fixed bandwidth)");
    }
    return m;
}

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
inline double ks_distance(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty()) throw InvalidArgument("KS distance needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

struct Histogram {
    std::vector<double> edges; // bins + 1
    std::vector<std::size_t> counts;
};

/// Equal-width bins over [lo, hi]; the last bin is closed. Values outside are dropped.
inline Histogram histogram(const std::vector<double>& x, int bins, double lo, double hi)
{
    if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    Histogram h;
    h.counts.assign(bins, 0);
    for (int b = 0; b <= bins; ++b) h.edges.push_back(b == bins ? hi : lo + (hi - lo) * b / bins);
    for (double v : x) {
        if (!(v >= lo && v <= hi)) continue;
        int b = static_cast<int>((v - lo) / (hi - lo) * bins);
        h.counts[std::min(b, bins - 1)]++;
    }
    return h;
}

inline Histogram histogram(const std::vector<double>& x, int bins)
{
    if (x.empty()) throw InvalidArgument("histogram of an empty sample");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return histogram(x, bins, *lo, *hi);
}

struct Histogram2D {
    std::vector<double> x_edges;
    std::vector<double> y_edges;
    std::vector<std::size_t> counts; // row-major [x_bin][y_bin]
    int x_bins = 0;
    int y_bins = 0;

    std::size_t at(int xb, int yb) const { return counts[static_cast<std::size_t>(xb) * y_bins + yb]; }
};

inline Histogram2D hist2d(const std::vector<double>& x, const std::vector<double>& y, int x_bins, int y_bins,
                          double x_lo, double x_hi, double y_lo, double y_hi)
{
    if (x.size() != y.size()) throw InvalidArgument("hist2d needs equal-length samples");
    const Histogram hx = histogram({}, x_bins, x_lo, x_hi);
    const Histogram hy = histogram({}, y_bins, y_lo, y_hi);
    Histogram2D h{hx.edges, hy.edges, std::vector<std::size_t>(static_cast<std::size_t>(x_bins) * y_bins, 0), x_bins, y_bins};
    auto bin = [](double v, const std::vector<double>& e, int n) {
        if (!(v >= e.front() && v <= e.back())) return -1;
        return std::min(static_cast<int>((v - e.front()) / (e.back() - e.front()) * n), n - 1);
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int bx = bin(x[i], h.x_edges, x_bins);
        const int by = bin(y[i], h.y_edges, y_bins);
        if (bx >= 0 && by >= 0) h.counts[static_cast<std::size_t>(bx) * y_bins + by]++;
    }
    return h;
}

/// Bins spanning the data; every point is counted.
inline Histogram2D hist2d(const std::vector<double>& x, const std::vector<double>& y, int bins)
{
    if (x.empty()) throw InvalidArgument("hist2d of an empty sample");
    const auto [xl, xh] = std::minmax_element(x.begin(), x.end());
    const auto [yl, yh] = std::minmax_element(y.begin(), y.end());
    double x_lo = *xl, x_hi = *xh, y_lo = *yl, y_hi = *yh;
    if (!(x_hi > x_lo)) { x_lo -= 0.5; x_hi += 0.5; }
    if (!(y_hi > y_lo)) { y_lo -= 0.5; y_hi += 0.5; }
    return hist2d(x, y, bins, bins, x_lo, x_hi, y_lo, y_hi);
}

struct DistributionComparison {
    double ks_statistic = 0.0;
    double mean_rel_err = 0.0;
    double std_rel_err = 0.0;
    std::size_t n_reference = 0;
    std::size_t n_candidate = 0;
};

/// Candidate (e.g. surrogate draws) against a reference (e.g. ground truth).
inline DistributionComparison compare_distributions(const std::vector<double>& reference, const std::vector<double>& candidate)
{
    DistributionComparison c;
    c.ks_statistic = ks_distance(reference, candidate);
    const double mr = sample_mean(reference), mc = sample_mean(candidate);
    const double sr = sample_std(reference), sc = sample_std(candidate);
    c.mean_rel_err = mr != 0 ? std::abs(mc - mr) / std::abs(mr) : std::abs(mc - mr);
    c.std_rel_err = sr != 0 ? std::abs(sc - sr) / sr : std::abs(sc - sr);
    c.n_reference = reference.size();
    c.n_candidate = candidate.size();
    return c;
}

} // namespace phonon_uq
