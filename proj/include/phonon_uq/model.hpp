#pragma once

#include "phonon_uq/bandgap.hpp"
#include "phonon_uq/dispersion.hpp"
#include "phonon_uq/errors.hpp"
#include "phonon_uq/geometry.hpp"
#include "phonon_uq/material.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace phonon_uq {

struct FemSettings {
    double lattice_constant = 0.1;
    int n_bands = 10;
    int k_per_segment = 16;
    SolverSettings solver;

    std::vector<KPoint> path() const { return ibz_path(k_per_segment, lattice_constant); }
};

/// Gap outputs of one model evaluation. A missing gap is a valid outcome, not an error.
struct GapOutcome {
    std::optional<BandGap> gap;
    std::string status = "ok"; // ok | no_gap | error: <reason>

    bool ok() const { return gap.has_value(); }
    double size() const { return gap ? gap->size() : std::numeric_limits<double>::quiet_NaN(); }
    double center() const { return gap ? gap->center() : std::numeric_limits<double>::quiet_NaN(); }
    double bottom() const { return gap ? gap->bottom : std::numeric_limits<double>::quiet_NaN(); }
    double top() const { return gap ? gap->top : std::numeric_limits<double>::quiet_NaN(); }
    int below_band() const { return gap ? gap->below_band : -1; }
};

inline GapOutcome gap_outcome(const DispersionResult& d, const GapPolicy& policy)
{
    GapOutcome out;
    out.gap = primary_gap(extract_gaps(d), policy);
    if (!out.gap) out.status = "no_gap";
    return out;
}

/**
 * Runs fn(i) for i in [0, n) on up to `jobs` threads. Work is claimed by index,
 * so results written to slot i do not depend on scheduling. The first
 * exception is rethrown after all workers stop.
 */
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn)
{
    const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace phonon_uq
