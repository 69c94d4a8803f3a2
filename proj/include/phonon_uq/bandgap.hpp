#pragma once

#include "phonon_uq/dispersion.hpp"
#include "phonon_uq/errors.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace phonon_uq {

/// Complete gap between band `below_band` and the next (1-based band numbers).
struct BandGap {
    int below_band = 0;
    double bottom = 0.0;
    double top = 0.0;
    double size() const { return top - bottom; }
    double center() const { return (top + bottom) / 2.0; }
};

struct GapPolicy {
    enum class Mode { largest, first, between_bands };
    Mode mode = Mode::largest;
    int band = 0;      // between_bands only
    int max_band = 10; // only gaps with below_band < max_band are considered

    static GapPolicy largest(int max_band = 10) { return {Mode::largest, 0, max_band}; }
    static GapPolicy first(int max_band = 10) { return {Mode::first, 0, max_band}; }
    static GapPolicy between(int n) { return {Mode::between_bands, n, std::numeric_limits<int>::max()}; }
};

/// Gap exists between n and n+1 iff min_k band_{n+1} > max_k band_n.
inline std::vector<BandGap> extract_gaps(const DispersionResult& d)
{
    if (d.n_bands < 2) throw InvalidArgument("gap extraction needs at least two bands");
    std::vector<double> lo(d.n_bands, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d.n_bands, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < d.n_kpoints(); ++i) {
        for (int b = 0; b < d.n_bands; ++b) {
            lo[b] = std::min(lo[b], d.at(i, b));
            hi[b] = std::max(hi[b], d.at(i, b));
        }
    }
    std::vector<BandGap> gaps;
    for (int b = 0; b + 1 < d.n_bands; ++b)
        if (lo[b + 1] > hi[b]) gaps.push_back({b + 1, hi[b], lo[b + 1]});
    return gaps;
}

inline std::optional<BandGap> primary_gap(const std::vector<BandGap>& gaps, const GapPolicy& policy)
{
    std::optional<BandGap> best;
    for (const auto& g : gaps) {
        if (policy.mode == GapPolicy::Mode::between_bands) {
            if (g.below_band == policy.band) return g;
            continue;
        }
        if (g.below_band >= policy.max_band) continue;
        if (policy.mode == GapPolicy::Mode::first) {
            if (!best || g.below_band < best->below_band) best = g;
        } else if (!best || g.size() > best->size() ||
                   (g.size() == best->size() && g.below_band < best->below_band)) {
            best = g;
        }
    }
    return best;
}

inline std::string to_string(GapPolicy::Mode mode)
{
    switch (mode) {
    case GapPolicy::Mode::largest: return "largest";
    case GapPolicy::Mode::first: return "first";
    case GapPolicy::Mode::between_bands: return "between_bands";
    }
    return "largest";
}

inline GapPolicy::Mode gap_mode_from_string(const std::string& s)
{
    if (s == "largest") return GapPolicy::Mode::largest;
    if (s == "first") return GapPolicy::Mode::first;
    if (s == "between_bands") return GapPolicy::Mode::between_bands;
    throw InvalidArgument("unknown gap policy mode '" + s + "'");
}

} // namespace phonon_uq
