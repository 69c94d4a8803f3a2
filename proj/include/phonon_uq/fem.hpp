#pragma once

#include "phonon_uq/errors.hpp"
#include "phonon_uq/geometry.hpp"
#include "phonon_uq/material.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace phonon_uq {

using cplx = std::complex<double>;
using SparseComplex = Eigen::SparseMatrix<cplx>;
using SparseReal = Eigen::SparseMatrix<double>;

struct UnitCellSpec {
    UnitCellBitmap bitmap;
    MaterialPair materials;
    double lattice_constant = 0.1; // m

    const ElasticMaterial& material_at(int row, int col) const
    {
        return bitmap.at(row, col) ? materials.hard : materials.soft;
    }
};

struct WaveVector {
    double kx = 0.0;
    double ky = 0.0;
};

struct KPoint {
    WaveVector k;
    double arclength = 0.0;
};

/**
 * Gamma -> X -> M -> Gamma around the irreducible Brillouin zone of a square
 * lattice. Segment corners are shared, so the path has 3n - 2 points.
 */
inline std::vector<KPoint> ibz_path(int n_per_segment, double lattice_constant)
{
    if (n_per_segment < 2) throw InvalidArgument("ibz_path needs at least 2 points per segment");
    if (!(lattice_constant > 0)) throw InvalidArgument("lattice constant must be positive");
    const double kmax = std::numbers::pi / lattice_constant;
    const std::array<WaveVector, 4> corners{{{0, 0}, {kmax, 0}, {kmax, kmax}, {0, 0}}};
    std::vector<KPoint> path;
    double s = 0.0;
    for (int seg = 0; seg < 3; ++seg) {
        const auto& a = corners[seg];
        const auto& b = corners[seg + 1];
        const double len = std::hypot(b.kx - a.kx, b.ky - a.ky);
        for (int i = (seg == 0 ? 0 : 1); i < n_per_segment; ++i) {
            const double t = static_cast<double>(i) / (n_per_segment - 1);
            path.push_back({{a.kx + t * (b.kx - a.kx), a.ky + t * (b.ky - a.ky)}, s + t * len});
        }
        s += len;
    }
    return path;
}

namespace detail {

using Matrix8d = Eigen::Matrix<double, 8, 8>;

// Q4 plane-strain element stiffness split as K_e = lambda * A + G * B. For a
// square element both parts are independent of the element size.
struct ElementStiffnessParts {
    Matrix8d lame_part;
    Matrix8d shear_part;
};

inline ElementStiffnessParts element_stiffness_parts()
{
    // local nodes: (0,0), (1,0), (1,1), (0,1) on the reference square [-1,1]^2
    constexpr double xi_n[4] = {-1, 1, 1, -1};
    constexpr double eta_n[4] = {-1, -1, 1, 1};
    const double g = 1.0 / std::sqrt(3.0);
    Eigen::Matrix3d d_lame;
    d_lame << 1, 1, 0, 1, 1, 0, 0, 0, 0;
    Eigen::Matrix3d d_shear;
    d_shear << 2, 0, 0, 0, 2, 0, 0, 0, 1;
    ElementStiffnessParts parts{Matrix8d::Zero(), Matrix8d::Zero()};
    // element side h: dN/dx = (2/h) dN/dxi, detJ = h^2/4; h cancels in B^T D B detJ
    for (double xi : {-g, g}) {
        for (double eta : {-g, g}) {
            Eigen::Matrix<double, 3, 8> b = Eigen::Matrix<double, 3, 8>::Zero();
            for (int a = 0; a < 4; ++a) {
                const double dnx = 0.25 * xi_n[a] * (1 + eta * eta_n[a]) * 2.0;
                const double dny = 0.25 * eta_n[a] * (1 + xi * xi_n[a]) * 2.0;
                b(0, 2 * a) = dnx;
                b(1, 2 * a + 1) = dny;
                b(2, 2 * a) = dny;
                b(2, 2 * a + 1) = dnx;
            }
            const double w = 0.25; // detJ / h^2
            parts.lame_part += w * b.transpose() * d_lame * b;
            parts.shear_part += w * b.transpose() * d_shear * b;
        }
    }
    return parts;
}

inline const ElementStiffnessParts& cached_element_parts()
{
    static const ElementStiffnessParts parts = element_stiffness_parts();
    return parts;
}

// Consistent scalar mass pattern of a unit-area bilinear element.
inline Eigen::Matrix4d element_mass_pattern()
{
    Eigen::Matrix4d m;
    m << 4, 2, 1, 2,
         2, 4, 2, 1,
         1, 2, 4, 2,
         2, 1, 2, 4;
    return m / 36.0;
}

} // namespace detail

/**
 * K(k) and M(k) of the Bloch-reduced unit cell, two dofs (ux, uy) per unique
 * node. Folding the consistent mass onto master nodes makes M Hermitian and
 * k-dependent; it is real symmetric at k = 0.
 */
struct AssembledOperators {
    SparseComplex stiffness;
    SparseComplex mass;
    int dof_count = 0;
    WaveVector k;
    // (pi/a)^2 * min G/rho over the phases present: squared angular frequency
    // of a zone-boundary shear wave in the slowest phase. Used to place shifts.
    double spectral_scale = 1.0;
};

/**
 * One bilinear quad per pixel. Nodes on the right/top boundary are folded
 * onto their left/bottom images with Bloch phase exp(i k . a).
 */
inline AssembledOperators assemble_operators(const UnitCellSpec& cell, WaveVector k)
{
    const int n = cell.bitmap.resolution();
    const double a = cell.lattice_constant;
    if (!(a > 0)) throw InvalidArgument("lattice constant must be positive");
    if (!std::isfinite(k.kx) || !std::isfinite(k.ky)) throw InvalidArgument("wave vector must be finite");
    const double h = a / n;
    const auto& parts = detail::cached_element_parts();
    const Eigen::Matrix4d mass_pattern = detail::element_mass_pattern() * (h * h);
    const cplx phase_x = std::polar(1.0, k.kx * a);
    const cplx phase_y = std::polar(1.0, k.ky * a);

    constexpr int node_dx[4] = {0, 1, 1, 0};
    constexpr int node_dy[4] = {0, 0, 1, 1};

    const int dofs = 2 * n * n;
    std::vector<Eigen::Triplet<cplx>> k_trip;
    std::vector<Eigen::Triplet<cplx>> m_trip;
    k_trip.reserve(static_cast<std::size_t>(n) * n * 64);
    m_trip.reserve(static_cast<std::size_t>(n) * n * 32);

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const auto& mat = cell.material_at(r, c);
            const detail::Matrix8d ke = mat.lame * parts.lame_part + mat.shear * parts.shear_part;
            std::array<int, 4> master{};
            std::array<cplx, 4> phase{};
            for (int q = 0; q < 4; ++q) {
                int ix = c + node_dx[q];
                int iy = r + node_dy[q];
                cplx p{1.0, 0.0};
                if (ix == n) { ix = 0; p *= phase_x; }
                if (iy == n) { iy = 0; p *= phase_y; }
                master[q] = iy * n + ix;
                phase[q] = p;
            }
            for (int qa = 0; qa < 4; ++qa) {
                for (int qb = 0; qb < 4; ++qb) {
                    const cplx coupling = std::conj(phase[qa]) * phase[qb];
                    for (int da = 0; da < 2; ++da)
                        for (int db = 0; db < 2; ++db)
                            k_trip.emplace_back(2 * master[qa] + da, 2 * master[qb] + db,
                                                coupling * ke(2 * qa + da, 2 * qb + db));
                    const cplx mv = coupling * (mat.density * mass_pattern(qa, qb));
                    for (int d = 0; d < 2; ++d)
                        m_trip.emplace_back(2 * master[qa] + d, 2 * master[qb] + d, mv);
                }
            }
        }
    }
    AssembledOperators ops;
    double slowest = std::numeric_limits<double>::infinity();
    const std::size_t hard = cell.bitmap.hard_count();
    if (hard > 0) slowest = std::min(slowest, cell.materials.hard.shear / cell.materials.hard.density);
    if (hard < cell.bitmap.cells().size())
        slowest = std::min(slowest, cell.materials.soft.shear / cell.materials.soft.density);
    ops.spectral_scale = slowest * (std::numbers::pi / a) * (std::numbers::pi / a);
    ops.dof_count = dofs;
    ops.k = k;
    ops.stiffness.resize(dofs, dofs);
    ops.stiffness.setFromTriplets(k_trip.begin(), k_trip.end());
    ops.mass.resize(dofs, dofs);
    ops.mass.setFromTriplets(m_trip.begin(), m_trip.end());
    return ops;
}

} // namespace phonon_uq
