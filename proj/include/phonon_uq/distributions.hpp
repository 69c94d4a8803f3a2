#pragma once

#include "phonon_uq/errors.hpp"
#include "phonon_uq/rng.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace phonon_uq {

/**
 * Univariate input distribution. Families: uniform(lo, hi), normal(mean, std),
 * truncated_normal(mean, std, lo, hi), gamma(shape, scale), beta(a, b) on [0, 1].
 */
class Distribution1D {
public:
    enum class Family { uniform, normal, truncated_normal, gamma, beta };

    static Distribution1D uniform(double lo, double hi)
    {
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw InvalidArgument("uniform needs finite lo < hi");
        return Distribution1D(Family::uniform, lo, hi, lo, hi);
    }

    static Distribution1D normal(double mean, double std)
    {
        if (!(std > 0) || !std::isfinite(mean)) throw InvalidArgument("normal needs finite mean and std > 0");
        const double inf = std::numeric_limits<double>::infinity();
        return Distribution1D(Family::normal, mean, std, -inf, inf);
    }

    static Distribution1D truncated_normal(double mean, double std, double lo, double hi)
    {
        if (!(std > 0) || !std::isfinite(mean)) throw InvalidArgument("truncated normal needs finite mean and std > 0");
        if (!(lo < hi)) throw InvalidArgument("truncation needs lo < hi");
        Distribution1D d(Family::truncated_normal, mean, std, lo, hi);
        if (!(d.mass_ >= 1e-12)) throw InvalidArgument("truncation interval carries negligible probability mass");
        return d;
    }

    /// Gamma with shape alpha and scale theta (mean alpha * theta).
    static Distribution1D gamma(double shape, double scale)
    {
        if (!(shape > 0) || !(scale > 0)) throw InvalidArgument("gamma needs shape > 0 and scale > 0");
        return Distribution1D(Family::gamma, shape, scale, 0.0, std::numeric_limits<double>::infinity());
    }

    static Distribution1D beta(double a, double b)
    {
        if (!(a > 0) || !(b > 0)) throw InvalidArgument("beta needs alpha > 0 and beta > 0");
        return Distribution1D(Family::beta, a, b, 0.0, 1.0);
    }

    Family family() const { return family_; }
    /// Raw parameters in declaration order: (lo, hi), (mean, std), (shape, scale), (a, b).
    double param1() const { return p1_; }
    double param2() const { return p2_; }
    double lower() const { return lo_; }
    double upper() const { return hi_; }
    bool bounded() const { return std::isfinite(lo_) && std::isfinite(hi_); }

    double pdf(double x) const
    {
        if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
        if (x < lo_ || x > hi_) return 0.0;
        switch (family_) {
        case Family::uniform: return 1.0 / (hi_ - lo_);
        case Family::normal: return boost::math::pdf(normal_(), x);
        case Family::truncated_normal: return boost::math::pdf(normal_(), x) / mass_;
        case Family::gamma:
            if (x == 0.0 && p1_ < 1.0) return std::numeric_limits<double>::infinity();
            return boost::math::pdf(boost::math::gamma_distribution<>(p1_, p2_), x);
        case Family::beta:
            if ((x == 0.0 && p1_ < 1.0) || (x == 1.0 && p2_ < 1.0)) return std::numeric_limits<double>::infinity();
            return boost::math::pdf(boost::math::beta_distribution<>(p1_, p2_), x);
        }
        return 0.0;
    }

    double cdf(double x) const
    {
        if (x <= lo_) return 0.0;
        if (x >= hi_) return 1.0;
        switch (family_) {
        case Family::uniform: return (x - lo_) / (hi_ - lo_);
        case Family::normal: return boost::math::cdf(normal_(), x);
        case Family::truncated_normal:
            if (upper_side_)
                return (sf_(lo_) - sf_(x)) / mass_;
            return (boost::math::cdf(normal_(), x) - boost::math::cdf(normal_(), lo_)) / mass_;
        case Family::gamma: return boost::math::cdf(boost::math::gamma_distribution<>(p1_, p2_), x);
        case Family::beta: return boost::math::cdf(boost::math::beta_distribution<>(p1_, p2_), x);
        }
        return 0.0;
    }

    double quantile(double u) const
    {
        if (!(u >= 0.0 && u <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
        if (u == 0.0) return lo_;
        if (u == 1.0) return hi_;
        switch (family_) {
        case Family::uniform: return lo_ + u * (hi_ - lo_);
        case Family::normal: return boost::math::quantile(normal_(), u);
        case Family::truncated_normal: {
            double x;
            if (upper_side_)
                x = boost::math::quantile(boost::math::complement(normal_(), sf_(lo_) - u * mass_));
            else
                x = boost::math::quantile(normal_(), boost::math::cdf(normal_(), lo_) + u * mass_);
            return std::min(std::max(x, lo_), hi_);
        }
        case Family::gamma: return boost::math::quantile(boost::math::gamma_distribution<>(p1_, p2_), u);
        case Family::beta: return boost::math::quantile(boost::math::beta_distribution<>(p1_, p2_), u);
        }
        return 0.0;
    }

    /// Quantile at level 1 - tail without forming 1 - tail (accurate far into the upper tail).
    double upper_quantile(double tail) const
    {
        if (!(tail > 0.0 && tail < 1.0)) return quantile(1.0 - tail);
        switch (family_) {
        case Family::normal: return boost::math::quantile(boost::math::complement(normal_(), tail));
        case Family::gamma:
            return boost::math::quantile(boost::math::complement(boost::math::gamma_distribution<>(p1_, p2_), tail));
        default: return quantile(1.0 - tail);
        }
    }

    double mean() const
    {
        switch (family_) {
        case Family::uniform: return 0.5 * (lo_ + hi_);
        case Family::normal: return p1_;
        case Family::truncated_normal: {
            const auto [a, b] = standardized_bounds_();
            return p1_ + p2_ * (phi_(a) - phi_(b)) / mass_;
        }
        case Family::gamma: return p1_ * p2_;
        case Family::beta: return p1_ / (p1_ + p2_);
        }
        return 0.0;
    }

    double variance() const
    {
        switch (family_) {
        case Family::uniform: return (hi_ - lo_) * (hi_ - lo_) / 12.0;
        case Family::normal: return p2_ * p2_;
        case Family::truncated_normal: {
            const auto [a, b] = standardized_bounds_();
            const double pa = phi_(a), pb = phi_(b);
            const double ta = std::isfinite(a) ? a * pa : 0.0;
            const double tb = std::isfinite(b) ? b * pb : 0.0;
            const double r = (pa - pb) / mass_;
            return p2_ * p2_ * (1.0 + (ta - tb) / mass_ - r * r);
        }
        case Family::gamma: return p1_ * p2_ * p2_;
        case Family::beta: {
            const double s = p1_ + p2_;
            return p1_ * p2_ / (s * s * (s + 1.0));
        }
        }
        return 0.0;
    }

    double stddev() const { return std::sqrt(variance()); }

    friend bool operator==(const Distribution1D& a, const Distribution1D& b)
    {
        return a.family_ == b.family_ && a.p1_ == b.p1_ && a.p2_ == b.p2_ && a.lo_ == b.lo_ && a.hi_ == b.hi_;
    }

private:
    Distribution1D(Family f, double p1, double p2, double lo, double hi) : family_(f), p1_(p1), p2_(p2), lo_(lo), hi_(hi)
    {
        if (family_ == Family::truncated_normal) {
            // Work in whichever tail keeps the interval mass accurate.
            upper_side_ = lo_ > p1_;
            mass_ = upper_side_ ? sf_(lo_) - sf_(hi_)
                                : boost::math::cdf(normal_(), hi_) - boost::math::cdf(normal_(), lo_);
        }
    }

    boost::math::normal_distribution<> normal_() const { return {p1_, p2_}; }
    double sf_(double x) const
    {
        if (x == std::numeric_limits<double>::infinity()) return 0.0;
        return boost::math::cdf(boost::math::complement(normal_(), x));
    }
    std::pair<double, double> standardized_bounds_() const { return {(lo_ - p1_) / p2_, (hi_ - p1_) / p2_}; }
    static double phi_(double z)
    {
        if (!std::isfinite(z)) return 0.0;
        return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
    }

    Family family_;
    double p1_;
    double p2_;
    double lo_;
    double hi_;
    double mass_ = 1.0;
    bool upper_side_ = false;
};

/// Gamma with the given mean and coefficient of variation: shape 1/c^2, scale mean/shape.
inline Distribution1D gamma_from_mean_cov(double mean, double cov)
{
    if (!(mean > 0)) throw InvalidArgument("gamma mean must be positive");
    if (!(cov > 0 && cov < 1)) throw InvalidArgument("coefficient of variation must lie in (0, 1)");
    const double shape = 1.0 / (cov * cov);
    return Distribution1D::gamma(shape, mean / shape);
}

inline Distribution1D beta_from_mean_std(double mean, double std)
{
    if (!(mean > 0 && mean < 1)) throw InvalidArgument("beta mean must lie in (0, 1)");
    if (!(std > 0)) throw InvalidArgument("beta std must be positive");
    const double common = mean * (1.0 - mean) / (std * std) - 1.0;
    if (!(common > 0))
        throw InvalidArgument("infeasible beta: variance must be below mean * (1 - mean) = " +
                              std::to_string(mean * (1.0 - mean)));
    return Distribution1D::beta(mean * common, (1.0 - mean) * common);
}

inline Distribution1D truncate(const Distribution1D& dist, double lo, double hi)
{
    if (dist.family() != Distribution1D::Family::normal && dist.family() != Distribution1D::Family::truncated_normal)
        throw InvalidArgument("only normal distributions can be truncated");
    return Distribution1D::truncated_normal(dist.param1(), dist.param2(), lo, hi);
}

/// Truncation at mean +/- n_sigmas standard deviations.
inline Distribution1D truncate_sigmas(const Distribution1D& dist, double n_sigmas = 4.0)
{
    return truncate(dist, dist.param1() - n_sigmas * dist.param2(), dist.param1() + n_sigmas * dist.param2());
}

inline std::string to_string(Distribution1D::Family f)
{
    switch (f) {
    case Distribution1D::Family::uniform: return "uniform";
    case Distribution1D::Family::normal: return "normal";
    case Distribution1D::Family::truncated_normal: return "truncated_normal";
    case Distribution1D::Family::gamma: return "gamma";
    case Distribution1D::Family::beta: return "beta";
    }
    return "uniform";
}

/// Independent components; the joint density is the product of the marginals.
struct JointDistribution {
    std::vector<Distribution1D> components;
    std::vector<std::string> labels;

    JointDistribution() = default;
    JointDistribution(std::vector<Distribution1D> comps, std::vector<std::string> names)
        : components(std::move(comps)), labels(std::move(names))
    {
        if (components.empty()) throw InvalidArgument("joint distribution needs at least one component");
        if (labels.empty())
            for (std::size_t j = 0; j < components.size(); ++j) labels.push_back("x" + std::to_string(j + 1));
        if (labels.size() != components.size()) throw InvalidArgument("one label per component required");
    }

    int dimension() const { return static_cast<int>(components.size()); }

    int index_of(const std::string& label) const
    {
        for (std::size_t j = 0; j < labels.size(); ++j)
            if (labels[j] == label) return static_cast<int>(j);
        return -1;
    }

    friend bool operator==(const JointDistribution& a, const JointDistribution& b)
    {
        return a.components == b.components && a.labels == b.labels;
    }
};

/// Key of sample row i; dimension j then draws from substream j of this key.
inline std::uint64_t sample_key(std::uint64_t seed, std::size_t row) { return derive_key(seed, row); }

/// Row i, column j is quantile_j(u) with u from the (seed, i, j) substream.
inline Eigen::MatrixXd sample_joint(const JointDistribution& joint, std::size_t n, std::uint64_t seed)
{
    if (n < 1) throw InvalidArgument("sample count must be at least 1");
    const int m = joint.dimension();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), m);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t key = sample_key(seed, i);
        for (int j = 0; j < m; ++j) {
            CounterRng rng(derive_key(key, static_cast<std::uint64_t>(j)));
            out(static_cast<Eigen::Index>(i), j) = joint.components[j].quantile(rng.uniform());
        }
    }
    return out;
}

inline double pdf_joint(const JointDistribution& joint, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    if (x.size() != joint.dimension()) throw InvalidArgument("point dimension does not match the joint distribution");
    double p = 1.0;
    for (int j = 0; j < joint.dimension(); ++j) {
        p *= joint.components[j].pdf(x[j]);
        if (p == 0.0) return 0.0;
    }
    return p;
}

inline void write_samples_csv(std::ostream& os, const JointDistribution& joint, const Eigen::MatrixXd& samples)
{
    for (int j = 0; j < joint.dimension(); ++j) os << (j ? "," : "") << joint.labels[j];
    os << '\n';
    char buf[64];
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        for (Eigen::Index j = 0; j < samples.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", samples(i, j));
            os << (j ? "," : "") << buf;
        }
        os << '\n';
    }
}

// JSON: {"name", "family", "params": {...}, "truncation"?: {"lower", "upper"} | {"sigmas"}}.
// Accepted params: uniform {lower, upper}; normal {mean, std}; gamma {shape, scale} or
// {mean, cov}; beta {alpha, beta} or {mean, std}.
inline nlohmann::json to_json(const Distribution1D& d)
{
    using F = Distribution1D::Family;
    nlohmann::json j;
    switch (d.family()) {
    case F::uniform: j = {{"family", "uniform"}, {"params", {{"lower", d.lower()}, {"upper", d.upper()}}}}; break;
    case F::normal: j = {{"family", "normal"}, {"params", {{"mean", d.param1()}, {"std", d.param2()}}}}; break;
    case F::truncated_normal:
        j = {{"family", "truncated_normal"},
             {"params", {{"mean", d.param1()}, {"std", d.param2()}}},
             {"truncation", {{"lower", d.lower()}, {"upper", d.upper()}}}};
        break;
    case F::gamma: j = {{"family", "gamma"}, {"params", {{"shape", d.param1()}, {"scale", d.param2()}}}}; break;
    case F::beta: j = {{"family", "beta"}, {"params", {{"alpha", d.param1()}, {"beta", d.param2()}}}}; break;
    }
    return j;
}

namespace detail {

inline double require_number(const nlohmann::json& obj, const char* key, const std::string& context)
{
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number())
        throw InvalidArgument(context + ": missing numeric parameter '" + key + "'");
    return obj[key].get<double>();
}

} // namespace detail

inline Distribution1D distribution_from_json(const nlohmann::json& j)
{
    const std::string context = j.contains("name") && j["name"].is_string() ? "distribution '" + j["name"].get<std::string>() + "'"
                                                                            : std::string("distribution");
    if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
        throw InvalidArgument(context + ": missing 'family'");
    const std::string family = j["family"].get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    auto num = [&](const char* key) { return detail::require_number(params, key, context); };
    Distribution1D d = Distribution1D::uniform(0, 1);
    if (family == "uniform") {
        d = Distribution1D::uniform(num("lower"), num("upper"));
    } else if (family == "normal" || family == "truncated_normal") {
        d = Distribution1D::normal(num("mean"), num("std"));
        if (family == "truncated_normal" && !j.contains("truncation"))
            throw InvalidArgument(context + ": truncated_normal needs 'truncation'");
    } else if (family == "gamma") {
        d = params.contains("cov") ? gamma_from_mean_cov(num("mean"), num("cov")) : Distribution1D::gamma(num("shape"), num("scale"));
    } else if (family == "beta") {
        d = params.contains("mean") ? beta_from_mean_std(num("mean"), num("std")) : Distribution1D::beta(num("alpha"), num("beta"));
    } else {
        throw InvalidArgument(context + ": unknown family '" + family + "'");
    }
    if (j.contains("truncation")) {
        const auto& t = j["truncation"];
        if (t.contains("sigmas"))
            d = truncate_sigmas(d, detail::require_number(t, "sigmas", context));
        else
            d = truncate(d, detail::require_number(t, "lower", context), detail::require_number(t, "upper", context));
    }
    return d;
}

inline nlohmann::json to_json(const JointDistribution& joint)
{
    nlohmann::json arr = nlohmann::json::array();
    for (int j = 0; j < joint.dimension(); ++j) {
        nlohmann::json e = to_json(joint.components[j]);
        e["name"] = joint.labels[j];
        arr.push_back(std::move(e));
    }
    return arr;
}

inline JointDistribution joint_from_json(const nlohmann::json& arr)
{
    if (!arr.is_array() || arr.empty()) throw InvalidArgument("joint distribution spec must be a nonempty list");
    std::vector<Distribution1D> comps;
    std::vector<std::string> labels;
    for (const auto& e : arr) {
        comps.push_back(distribution_from_json(e));
        labels.push_back(e.value("name", "x" + std::to_string(labels.size() + 1)));
    }
    return JointDistribution(std::move(comps), std::move(labels));
}

} // namespace phonon_uq
