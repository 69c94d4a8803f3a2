#pragma once

#include "phonon_uq/eigensolver.hpp"
#include "phonon_uq/fem.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace phonon_uq {

/// Frequencies (Hz) per k-point and band; each row ascending.
struct DispersionResult {
    std::vector<KPoint> kpath;
    int n_bands = 0;
    std::vector<double> frequencies; // row-major [k][band]

    double at(std::size_t k_index, int band) const { return frequencies[k_index * n_bands + band]; }
    std::size_t n_kpoints() const { return kpath.size(); }

    friend bool operator==(const DispersionResult& a, const DispersionResult& b)
    {
        if (a.n_bands != b.n_bands || a.frequencies != b.frequencies || a.kpath.size() != b.kpath.size()) return false;
        for (std::size_t i = 0; i < a.kpath.size(); ++i)
            if (a.kpath[i].k.kx != b.kpath[i].k.kx || a.kpath[i].k.ky != b.kpath[i].k.ky ||
                a.kpath[i].arclength != b.kpath[i].arclength)
                return false;
        return true;
    }
};

inline DispersionResult dispersion(const UnitCellSpec& cell, const std::vector<KPoint>& path, int n_bands,
                                   const SolverSettings& settings = {})
{
    if (path.empty()) throw InvalidArgument("dispersion needs a nonempty k-path");
    DispersionResult out;
    out.kpath = path;
    out.n_bands = n_bands;
    out.frequencies.reserve(path.size() * n_bands);
    for (std::size_t i = 0; i < path.size(); ++i) {
        try {
            const auto ops = assemble_operators(cell, path[i].k);
            const auto sol = solve_bands(ops, n_bands, settings);
            out.frequencies.insert(out.frequencies.end(), sol.frequencies.begin(), sol.frequencies.end());
        } catch (const SolverError& e) {
            throw SolverError("k-index " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

/// CSV columns: k_index, arclength, kx, ky, band_1..band_n (full precision).
inline void write_dispersion_csv(std::ostream& os, const DispersionResult& d)
{
    os << "k_index,arclength,kx,ky";
    for (int b = 0; b < d.n_bands; ++b) os << ",band_" << (b + 1);
    os << '\n';
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << ',' << buf;
    };
    for (std::size_t i = 0; i < d.n_kpoints(); ++i) {
        os << i;
        put(d.kpath[i].arclength);
        put(d.kpath[i].k.kx);
        put(d.kpath[i].k.ky);
        for (int b = 0; b < d.n_bands; ++b) put(d.at(i, b));
        os << '\n';
    }
}

} // namespace phonon_uq
