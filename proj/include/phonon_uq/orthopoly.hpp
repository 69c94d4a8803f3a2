#pragma once

#include "phonon_uq/distributions.hpp"
#include "phonon_uq/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace phonon_uq {

/**
 * Monic three-term recurrence pi_{k+1} = (x - alpha_k) pi_k - beta_k pi_{k-1}
 * of the polynomials orthogonal under a probability measure. beta_0 is the
 * total mass (1); alpha and beta hold entries 0..max_degree.
 */
struct Recurrence {
    std::vector<double> alpha;
    std::vector<double> beta;
    int max_degree() const { return static_cast<int>(alpha.size()) - 1; }
};

/// Discretization of a measure: nodes and weights summing to 1.
struct DiscreteMeasure {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

// Gauss-Legendre rule on [-1, 1] for composite discretizations.
inline void legendre_rule(int n, std::vector<double>& x, std::vector<double>& w)
{
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k, k - 1) = b;
        jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        x[i] = es.eigenvalues()[i];
        w[i] = 2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    }
}

} // namespace detail

/**
 * Composite Gauss-Legendre discretization (panels x points_per_panel) of the
 * distribution's density. Unbounded ends are cut at the tail_mass quantiles;
 * panels are graded geometrically into an endpoint where the density is infinite.
 */
inline DiscreteMeasure discretize(const Distribution1D& dist, int panels = 256, int points_per_panel = 16,
                                  double tail_mass = 1e-30)
{
    const double lo = std::isfinite(dist.lower()) ? dist.lower() : dist.quantile(tail_mass);
    const double hi = std::isfinite(dist.upper()) ? dist.upper() : dist.upper_quantile(tail_mass);
    std::vector<double> gx, gw;
    detail::legendre_rule(points_per_panel, gx, gw);
    const double width = (hi - lo) / panels;
    std::vector<double> edges;
    for (int p = 0; p <= panels; ++p) edges.push_back(p == panels ? hi : lo + p * width);
    // geometric refinement towards an endpoint where the density blows up
    const auto graded = [&](double end, double dir) {
        std::vector<double> g;
        for (int k = 1; k <= 60; ++k) {
            const double x = end + dir * width * std::pow(0.25, k);
            if (std::abs(x - end) < 1e-13 * std::max(1.0, std::abs(end))) break;
            g.push_back(x);
        }
        return g;
    };
    const bool cap_lo = std::isfinite(dist.lower()) && !std::isfinite(dist.pdf(lo));
    const bool cap_hi = std::isfinite(dist.upper()) && !std::isfinite(dist.pdf(hi));
    if (cap_lo) {
        const auto g = graded(lo, 1.0);
        edges.insert(edges.begin() + 1, g.rbegin(), g.rend());
    }
    if (cap_hi) {
        const auto g = graded(hi, -1.0);
        edges.insert(edges.end() - 1, g.begin(), g.end());
    }
    DiscreteMeasure out;
    out.nodes.reserve((edges.size() - 1) * points_per_panel);
    out.weights.reserve(out.nodes.capacity());
    double total = 0.0;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double c = 0.5 * (edges[p] + edges[p + 1]);
        const double h = edges[p + 1] - edges[p];
        // the innermost sliver next to a singular endpoint is one node carrying its exact mass
        if ((p == 0 && cap_lo) || (p + 2 == edges.size() && cap_hi)) {
            const double w = dist.cdf(edges[p + 1]) - dist.cdf(edges[p]);
            out.nodes.push_back(c);
            out.weights.push_back(w);
            total += w;
            continue;
        }
        for (int i = 0; i < points_per_panel; ++i) {
            const double x = c + 0.5 * h * gx[i];
            const double w = 0.5 * h * gw[i] * dist.pdf(x);
            out.nodes.push_back(x);
            out.weights.push_back(w);
            total += w;
        }
    }
    for (double& w : out.weights) w /= total;
    return out;
}

/// Discretized Stieltjes procedure on a discrete measure, carried out with orthonormal vectors.
inline Recurrence stieltjes(const DiscreteMeasure& measure, int max_degree)
{
    if (max_degree < 0) throw InvalidArgument("max_degree must be nonnegative");
    const std::size_t n = measure.nodes.size();
    if (n <= static_cast<std::size_t>(max_degree)) throw ConstructionError("too few discretization points", 0);
    const auto& x = measure.nodes;
    const auto& w = measure.weights;
    Recurrence rec;
    rec.alpha.assign(max_degree + 1, 0.0);
    rec.beta.assign(max_degree + 1, 0.0);
    double mass = 0.0;
    for (double wi : w) mass += wi;
    rec.beta[0] = mass;
    std::vector<double> prev(n, 0.0), cur(n, 1.0 / std::sqrt(mass)), next(n);
    for (int k = 0; k <= max_degree; ++k) {
        double a = 0.0;
        for (std::size_t i = 0; i < n; ++i) a += w[i] * x[i] * cur[i] * cur[i];
        rec.alpha[k] = a;
        if (k == max_degree) break;
        const double sb = k == 0 ? 0.0 : std::sqrt(rec.beta[k]);
        double b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = (x[i] - a) * cur[i] - sb * prev[i];
            b += w[i] * next[i] * next[i];
        }
        if (!(b > 0) || !std::isfinite(b)) throw ConstructionError("Stieltjes breakdown: nonpositive beta", k);
        rec.beta[k + 1] = b;
        const double inv = 1.0 / std::sqrt(b);
        for (std::size_t i = 0; i < n; ++i) next[i] *= inv;
        std::swap(prev, cur);
        std::swap(cur, next);
    }
    return rec;
}

inline Recurrence stieltjes(const Distribution1D& dist, int max_degree) { return stieltjes(discretize(dist), max_degree); }

/**
 * Recurrence for the distribution's measure: closed forms (Legendre, Hermite,
 * Laguerre, Jacobi mapped to the actual support and parameters), Stieltjes for
 * the truncated normal.
 */
inline Recurrence recurrence_for(const Distribution1D& dist, int max_degree)
{
    using F = Distribution1D::Family;
    if (max_degree < 0) throw InvalidArgument("max_degree must be nonnegative");
    Recurrence rec;
    rec.alpha.assign(max_degree + 1, 0.0);
    rec.beta.assign(max_degree + 1, 0.0);
    rec.beta[0] = 1.0;
    switch (dist.family()) {
    case F::uniform: {
        const double c = 0.5 * (dist.lower() + dist.upper());
        const double h = 0.5 * (dist.upper() - dist.lower());
        for (int k = 0; k <= max_degree; ++k) {
            rec.alpha[k] = c;
            if (k > 0) rec.beta[k] = h * h * k * k / (4.0 * k * k - 1.0);
        }
        break;
    }
    case F::normal: {
        const double s2 = dist.param2() * dist.param2();
        for (int k = 0; k <= max_degree; ++k) {
            rec.alpha[k] = dist.param1();
            if (k > 0) rec.beta[k] = s2 * k;
        }
        break;
    }
    case F::gamma: {
        const double a = dist.param1();
        const double th = dist.param2();
        for (int k = 0; k <= max_degree; ++k) {
            rec.alpha[k] = th * (2.0 * k + a);
            if (k > 0) rec.beta[k] = th * th * k * (k + a - 1.0);
        }
        break;
    }
    case F::beta: {
        // Jacobi weight (1 - t)^A (1 + t)^B on t = 2x - 1
        const double A = dist.param2() - 1.0;
        const double B = dist.param1() - 1.0;
        const double s = A + B;
        for (int k = 0; k <= max_degree; ++k) {
            double at;
            if (k == 0)
                at = (B - A) / (s + 2.0);
            else
                at = (B * B - A * A) / ((2.0 * k + s) * (2.0 * k + s + 2.0));
            rec.alpha[k] = 0.5 * (at + 1.0);
            if (k == 1) {
                rec.beta[k] = 0.25 * 4.0 * (1.0 + A) * (1.0 + B) / ((2.0 + s) * (2.0 + s) * (3.0 + s));
            } else if (k > 1) {
                const double t = 2.0 * k + s;
                rec.beta[k] = 0.25 * 4.0 * k * (k + A) * (k + B) * (k + s) / (t * t * (t + 1.0) * (t - 1.0));
            }
        }
        break;
    }
    case F::truncated_normal: return stieltjes(dist, max_degree);
    }
    for (int k = 1; k <= max_degree; ++k)
        if (!(rec.beta[k] > 0) || !std::isfinite(rec.beta[k]))
            throw ConstructionError("recurrence breakdown: nonpositive beta", k - 1);
    return rec;
}

/// Orthonormal polynomial phi_degree(x); phi_0 = 1.
inline double eval_orthonormal(const Recurrence& rec, int degree, double x)
{
    if (degree < 0 || degree > rec.max_degree()) throw InvalidArgument("degree outside the recurrence range");
    double prev = 0.0;
    double cur = 1.0;
    for (int k = 0; k < degree; ++k) {
        const double next = ((x - rec.alpha[k]) * cur - (k > 0 ? std::sqrt(rec.beta[k]) * prev : 0.0)) /
                            std::sqrt(rec.beta[k + 1]);
        prev = cur;
        cur = next;
    }
    return cur;
}

/// phi_0(x) .. phi_degree(x) in one pass.
inline void eval_orthonormal_all(const Recurrence& rec, int degree, double x, double* out)
{
    if (degree < 0 || degree > rec.max_degree()) throw InvalidArgument("degree outside the recurrence range");
    out[0] = 1.0;
    for (int k = 0; k < degree; ++k)
        out[k + 1] = ((x - rec.alpha[k]) * out[k] - (k > 0 ? std::sqrt(rec.beta[k]) * out[k - 1] : 0.0)) /
                     std::sqrt(rec.beta[k + 1]);
}

} // namespace phonon_uq
