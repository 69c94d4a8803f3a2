#pragma once

#include "phonon_uq/cache.hpp"
#include "phonon_uq/geometry.hpp"
#include "phonon_uq/model.hpp"
#include "phonon_uq/stats.hpp"

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace phonon_uq {

/// Shared inputs of the defect studies.
struct DefectStudySetup {
    UnitCellBitmap design;
    MaterialPair materials = nominal_materials();
    FemSettings fem;
    GapPolicy policy = GapPolicy::largest();
    std::uint64_t seed = 0;
    int jobs = 1;
    EvalCache* cache = nullptr;
};

/// Seed of realization r of a (resolution, fp) cell in the defect studies.
inline std::uint64_t realization_seed(std::uint64_t seed, int resolution, double fp, int r)
{
    const std::uint64_t cell = derive_key(derive_key(seed, static_cast<std::uint64_t>(resolution)),
                                          static_cast<std::uint64_t>(std::llround(fp * 1e9)));
    return derive_key(cell, static_cast<std::uint64_t>(r));
}

/// One defective geometry per realization at the given resolution and FP.
inline std::vector<GapOutcome> defect_realizations(const DefectStudySetup& setup, int resolution, double fp, int n_realizations)
{
    const UnitCellBitmap base = resample_bitmap(setup.design, resolution);
    std::vector<GapOutcome> out(static_cast<std::size_t>(n_realizations));
    parallel_for(out.size(), setup.jobs, [&](std::size_t r) {
        const auto seed = realization_seed(setup.seed, resolution, fp, static_cast<int>(r));
        const UnitCellBitmap geo = apply_defects(base, {fp, seed});
        try {
            out[r] = gap_outcome(cached_dispersion(geo, setup.materials, setup.fem, setup.cache), setup.policy);
        } catch (const SolverError& e) {
            throw SolverError("resolution " + std::to_string(resolution) + ", realization " + std::to_string(r) + ": " + e.what());
        }
    });
    return out;
}

struct GapSummary {
    int n = 0;      // realizations
    int n_gaps = 0; // realizations with a gap
    double mean_size = 0, mean_bottom = 0, mean_top = 0, mean_center = 0;
    double std_size = 0, std_center = 0;
    double range_size = 0, range_center = 0;
};

inline GapSummary summarize(const std::vector<GapOutcome>& outcomes)
{
    GapSummary s;
    s.n = static_cast<int>(outcomes.size());
    std::vector<double> size, bottom, top, center;
    for (const auto& o : outcomes) {
        if (!o.ok()) continue;
        size.push_back(o.size());
        bottom.push_back(o.bottom());
        top.push_back(o.top());
        center.push_back(o.center());
    }
    s.n_gaps = static_cast<int>(size.size());
    if (size.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.mean_size = s.mean_bottom = s.mean_top = s.mean_center = s.std_size = s.std_center = nan;
        s.range_size = s.range_center = nan;
        return s;
    }
    s.mean_size = sample_mean(size);
    s.mean_bottom = sample_mean(bottom);
    s.mean_top = sample_mean(top);
    s.mean_center = sample_mean(center);
    s.std_size = sample_std(size);
    s.std_center = sample_std(center);
    s.range_size = *std::max_element(size.begin(), size.end()) - *std::min_element(size.begin(), size.end());
    s.range_center = *std::max_element(center.begin(), center.end()) - *std::min_element(center.begin(), center.end());
    return s;
}

struct ResolutionRow {
    int resolution = 0;
    GapSummary summary;
};

/// Mean gap outputs over defect realizations at fixed FP for each resolution.
inline std::vector<ResolutionRow> resolution_convergence_study(const DefectStudySetup& setup, double fp,
                                                               const std::vector<int>& resolutions, int n_realizations)
{
    if (n_realizations < 1) throw InvalidArgument("need at least one realization");
    for (std::size_t i = 1; i < resolutions.size(); ++i)
        if (resolutions[i] <= resolutions[i - 1]) throw InvalidArgument("resolutions must be strictly ascending");
    std::vector<ResolutionRow> rows;
    for (int res : resolutions) rows.push_back({res, summarize(defect_realizations(setup, res, fp, n_realizations))});
    return rows;
}

struct FpNoiseResult {
    double fp = 0;
    int resolution = 0;
    std::vector<GapOutcome> realizations;
    GapSummary summary;
};

/// Spread of gap outputs across same-FP realizations with fixed materials.
inline FpNoiseResult fp_noise_study(const DefectStudySetup& setup, double fp, int resolution, int n_realizations)
{
    if (n_realizations < 2) throw InvalidArgument("fp noise study needs at least two realizations");
    FpNoiseResult r{fp, resolution, defect_realizations(setup, resolution, fp, n_realizations), {}};
    r.summary = summarize(r.realizations);
    return r;
}

struct FpSweepResult {
    int resolution = 0;
    std::vector<double> fps;
    std::vector<std::vector<GapOutcome>> realizations; // per fp
    GapSummary pooled;                                  // over all (fp, realization) pairs
};

inline FpSweepResult fp_sweep_study(const DefectStudySetup& setup, const std::vector<double>& fps, int resolution, int n_per_fp)
{
    FpSweepResult r{resolution, fps, {}, {}};
    std::vector<GapOutcome> all;
    for (double fp : fps) {
        r.realizations.push_back(defect_realizations(setup, resolution, fp, n_per_fp));
        all.insert(all.end(), r.realizations.back().begin(), r.realizations.back().end());
    }
    r.pooled = summarize(all);
    return r;
}

namespace detail {

inline std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline void write_resolution_csv(std::ostream& os, const std::vector<ResolutionRow>& rows)
{
    os << "resolution,n_realizations,n_gaps,mean_gap_size,mean_gap_bottom,mean_gap_top,mean_gap_center,std_gap_size\n";
    for (const auto& r : rows) {
        const auto& s = r.summary;
        os << r.resolution << ',' << s.n << ',' << s.n_gaps << ',' << detail::fmt(s.mean_size) << ','
           << detail::fmt(s.mean_bottom) << ',' << detail::fmt(s.mean_top) << ',' << detail::fmt(s.mean_center) << ','
           << detail::fmt(s.std_size) << '\n';
    }
}

inline void write_realizations_csv(std::ostream& os, const std::vector<double>& fps, const std::vector<std::vector<GapOutcome>>& groups,
                                   int resolution)
{
    os << "resolution,fp,realization,gap_size,gap_center,gap_bottom,gap_top,below_band,status\n";
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t r = 0; r < groups[g].size(); ++r) {
            const auto& o = groups[g][r];
            os << resolution << ',' << detail::fmt(fps[g]) << ',' << r << ',' << detail::fmt(o.size()) << ','
               << detail::fmt(o.center()) << ',' << detail::fmt(o.bottom()) << ',' << detail::fmt(o.top()) << ','
               << o.below_band() << ',' << o.status << '\n';
        }
}

} // namespace phonon_uq
