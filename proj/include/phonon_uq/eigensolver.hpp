#pragma once

#include "phonon_uq/errors.hpp"
#include "phonon_uq/fem.hpp"
#include "phonon_uq/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace phonon_uq {

enum class SolverKind { automatic, dense, iterative };

struct SolverSettings {
    SolverKind kind = SolverKind::automatic;
    // automatic uses the dense solver up to this many dofs
    int dense_max_dofs = 2 * 12 * 12;
    // relative Ritz residual for the iterative solver
    double tolerance = 1e-7;
    int block_size = 3;
    int max_subspace = 0; // 0: chosen from n_bands and dof count
    bool keep_vectors = false;
};

struct BandSolution {
    std::vector<double> eigenvalues; // omega^2, ascending, clamped at 0
    std::vector<double> frequencies; // Hz
    std::optional<Eigen::MatrixXcd> vectors;
};

namespace detail {

inline std::string describe(const AssembledOperators& ops)
{
    std::ostringstream os;
    os << "(dofs " << ops.dof_count << ", k = [" << ops.k.kx << ", " << ops.k.ky << "])";
    return os.str();
}

// Clamp roundoff negatives in [-tol, 0) with tol = 1e-9 * largest returned value.
inline BandSolution finalize(std::vector<double> eigenvalues, std::optional<Eigen::MatrixXcd> vectors,
                             const AssembledOperators& ops)
{
    const double largest = eigenvalues.empty() ? 0.0 : std::abs(eigenvalues.back());
    const double tol = 1e-9 * largest;
    BandSolution out;
    for (double& ev : eigenvalues) {
        if (ev < 0) {
            if (ev < -tol) throw SolverError("negative eigenvalue " + std::to_string(ev) + " beyond tolerance " + describe(ops));
            ev = 0.0;
        }
        out.frequencies.push_back(std::sqrt(ev) / (2.0 * std::numbers::pi));
    }
    out.eigenvalues = std::move(eigenvalues);
    out.vectors = std::move(vectors);
    return out;
}

} // namespace detail

/// Dense Hermitian-definite solve of K u = omega^2 M u.
inline BandSolution solve_bands_dense(const AssembledOperators& ops, int n_bands, bool keep_vectors = false)
{
    if (n_bands < 1 || n_bands > ops.dof_count) throw InvalidArgument("n_bands must lie in [1, dof_count]");
    const Eigen::MatrixXcd k = Eigen::MatrixXcd(ops.stiffness);
    const Eigen::MatrixXcd m = Eigen::MatrixXcd(ops.mass);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
        k, m, keep_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw SolverError("dense eigensolver failed " + detail::describe(ops));
    std::vector<double> ev(solver.eigenvalues().data(), solver.eigenvalues().data() + n_bands);
    std::optional<Eigen::MatrixXcd> vecs;
    if (keep_vectors) vecs = solver.eigenvectors().leftCols(n_bands);
    return detail::finalize(std::move(ev), std::move(vecs), ops);
}

/**
 * Shift-invert block Krylov solver for the n_bands smallest eigenpairs.
 *
 * Works with Op = (K - sigma M)^{-1} M, sigma < 0, which is self-adjoint in
 * the M inner product. An M-orthonormal block Krylov basis is grown with full
 * reorthogonalisation; Rayleigh-Ritz on the projected operator gives
 * theta = 1 / (lambda - sigma). Blocks guard against missing members of
 * degenerate eigenspaces (high-symmetry k-points).
 */
inline BandSolution solve_bands_iterative(const AssembledOperators& ops, int n_bands,
                                          const SolverSettings& settings = {})
{
    const int n = ops.dof_count;
    if (n_bands < 1 || n_bands > n) throw InvalidArgument("n_bands must lie in [1, dof_count]");
    const int block = std::max(1, settings.block_size);
    int max_cols = settings.max_subspace > 0 ? settings.max_subspace : std::max(8 * n_bands, 6 * block + 2 * n_bands);
    max_cols = std::min(max_cols, n);
    if (max_cols < n_bands + block) {
        // tiny problems: the Krylov space would be the whole space anyway
        return solve_bands_dense(ops, n_bands, settings.keep_vectors);
    }

    const double sigma = -0.1 * ops.spectral_scale;
    SparseComplex shifted = ops.stiffness - sigma * ops.mass;
    Eigen::SimplicialLLT<SparseComplex, Eigen::Lower> factor(shifted);
    if (factor.info() != Eigen::Success) throw SolverError("factorisation of K - sigma M failed " + detail::describe(ops));

    Eigen::MatrixXcd basis(n, max_cols);
    Eigen::MatrixXcd mass_basis(n, max_cols); // M * basis
    Eigen::MatrixXcd op_basis(n, max_cols);   // Op * basis
    Eigen::MatrixXcd projected = Eigen::MatrixXcd::Zero(max_cols, max_cols);
    int cols = 0;

    // M-orthonormalise a candidate against the basis (two passes) and append it.
    auto append = [&](Eigen::VectorXcd v) -> bool {
        Eigen::VectorXcd mv = ops.mass * v;
        const double initial = std::sqrt(std::max(0.0, v.dot(mv).real()));
        double before = initial;
        double norm = initial;
        for (int pass = 0; pass < 2 && cols > 0; ++pass) {
            const Eigen::VectorXcd coeffs = mass_basis.leftCols(cols).adjoint() * v;
            v -= basis.leftCols(cols) * coeffs;
            mv -= mass_basis.leftCols(cols) * coeffs;
            norm = std::sqrt(std::max(0.0, v.dot(mv).real()));
            if (norm > 0.7 * before) break; // DGKS: no severe cancellation, one pass suffices
            before = norm;
        }
        if (!(norm > 1e-10 * initial)) return false;
        basis.col(cols) = v / norm;
        mass_basis.col(cols) = mv / norm;
        op_basis.col(cols) = factor.solve(Eigen::VectorXcd(mass_basis.col(cols)));
        ++cols;
        return true;
    };
    // Extend the projected operator V^H M Op V with columns [from, cols).
    auto extend_projection = [&](int from) {
        const int w = cols - from;
        if (w <= 0) return;
        projected.block(0, from, cols, w) = mass_basis.leftCols(cols).adjoint() * op_basis.middleCols(from, w);
        projected.block(from, 0, w, from) = projected.block(0, from, from, w).adjoint();
    };

    CounterRng rng(0x5eedf00dULL);
    for (int b = 0; b < block; ++b) {
        Eigen::VectorXcd v(n);
        for (int i = 0; i < n; ++i) v[i] = cplx(rng.uniform() - 0.5, rng.uniform() - 0.5);
        append(std::move(v));
    }
    extend_projection(0);
    int block_start = 0;
    int block_end = cols;

    std::vector<double> result;
    std::optional<Eigen::MatrixXcd> vectors;
    bool converged = false;
    while (true) {
        if (cols >= 2 * n_bands || cols >= max_cols) {
            Eigen::MatrixXcd h = projected.topLeftCorner(cols, cols);
            h = (0.5 * (h + h.adjoint())).eval();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ritz(h);
            if (ritz.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz step failed " + detail::describe(ops));
            // Only Op applied to the newest block can leave span(V).
            const int w = block_end - block_start;
            Eigen::MatrixXcd leak = op_basis.middleCols(block_start, w);
            for (int pass = 0; pass < 2; ++pass)
                leak -= basis.leftCols(cols) * (mass_basis.leftCols(cols).adjoint() * leak);
            const Eigen::MatrixXcd leak_gram = leak.adjoint() * (ops.mass * leak);
            bool all_ok = true;
            std::vector<double> lambdas;
            for (int j = 0; j < n_bands; ++j) {
                const int idx = cols - 1 - j; // largest theta <-> smallest lambda
                const double theta = ritz.eigenvalues()[idx];
                const Eigen::VectorXcd s_new = ritz.eigenvectors().col(idx).segment(block_start, w);
                const double rnorm = std::sqrt(std::max(0.0, s_new.dot(leak_gram * s_new).real()));
                if (!(theta > 0) || rnorm > settings.tolerance * theta) all_ok = false;
                lambdas.push_back(sigma + 1.0 / theta);
            }
            if (all_ok) {
                result = lambdas;
                if (settings.keep_vectors) {
                    Eigen::MatrixXcd v(n, n_bands);
                    for (int j = 0; j < n_bands; ++j)
                        v.col(j) = basis.leftCols(cols) * ritz.eigenvectors().col(cols - 1 - j);
                    vectors = std::move(v);
                }
                converged = true;
                break;
            }
        }
        if (cols >= max_cols) break;
        const int start = cols;
        for (int j = block_start; j < block_end && cols < max_cols; ++j)
            append(Eigen::VectorXcd(op_basis.col(j)));
        if (cols == start) break; // Krylov space exhausted
        extend_projection(start);
        block_start = start;
        block_end = cols;
    }
    if (!converged) {
        if (max_cols < n) {
            SolverSettings bigger = settings;
            bigger.max_subspace = std::min(n, 2 * max_cols);
            return solve_bands_iterative(ops, n_bands, bigger);
        }
        // the Krylov space spans everything reachable; use the exact solve
        return solve_bands_dense(ops, n_bands, settings.keep_vectors);
    }
    std::vector<int> order(result.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return result[a] < result[b]; });
    std::vector<double> sorted;
    for (int i : order) sorted.push_back(result[i]);
    if (vectors) {
        Eigen::MatrixXcd v(n, n_bands);
        for (int j = 0; j < n_bands; ++j) v.col(j) = vectors->col(order[j]);
        vectors = std::move(v);
    }
    return detail::finalize(std::move(sorted), std::move(vectors), ops);
}

inline BandSolution solve_bands(const AssembledOperators& ops, int n_bands, const SolverSettings& settings = {})
{
    switch (settings.kind) {
    case SolverKind::dense: return solve_bands_dense(ops, n_bands, settings.keep_vectors);
    case SolverKind::iterative: return solve_bands_iterative(ops, n_bands, settings);
    case SolverKind::automatic:
        if (ops.dof_count <= settings.dense_max_dofs) return solve_bands_dense(ops, n_bands, settings.keep_vectors);
        return solve_bands_iterative(ops, n_bands, settings);
    }
    throw InvalidArgument("unknown solver kind");
}

} // namespace phonon_uq
