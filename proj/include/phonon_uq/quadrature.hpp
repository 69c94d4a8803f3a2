#pragma once

#include "phonon_uq/distributions.hpp"
#include "phonon_uq/errors.hpp"
#include "phonon_uq/orthopoly.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace phonon_uq {

/// Nodes (one row per point) and weights of a rule for a probability measure.
struct QuadratureRule {
    Eigen::MatrixXd nodes;
    Eigen::VectorXd weights;

    Eigen::Index size() const { return weights.size(); }
    int dimension() const { return static_cast<int>(nodes.cols()); }
};

/// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights the squared first eigenvector entries.
inline QuadratureRule gauss_rule(const Recurrence& rec, int n_points)
{
    if (n_points < 1) throw InvalidArgument("a Gauss rule needs at least one point");
    if (rec.max_degree() < n_points - 1) throw InvalidArgument("recurrence too short for the requested rule");
    Eigen::VectorXd diag(n_points);
    Eigen::VectorXd sub(std::max(0, n_points - 1));
    for (int k = 0; k < n_points; ++k) diag[k] = rec.alpha[k];
    for (int k = 1; k < n_points; ++k) sub[k - 1] = std::sqrt(rec.beta[k]);
    QuadratureRule rule;
    rule.nodes.resize(n_points, 1);
    rule.weights.resize(n_points);
    if (n_points == 1) {
        rule.nodes(0, 0) = diag[0];
        rule.weights[0] = 1.0;
        return rule;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw ConstructionError("Jacobi matrix eigensolve failed", n_points - 1);
    for (int i = 0; i < n_points; ++i) {
        rule.nodes(i, 0) = es.eigenvalues()[i];
        const double v = es.eigenvectors()(0, i);
        rule.weights[i] = rec.beta[0] * v * v;
    }
    return rule;
}

inline QuadratureRule gauss_rule(const Distribution1D& dist, int n_points)
{
    if (n_points < 1) throw InvalidArgument("a Gauss rule needs at least one point");
    return gauss_rule(recurrence_for(dist, n_points - 1), n_points);
}

/// Rule for a quadrature of the given degree: degree + 1 points.
inline QuadratureRule gauss_rule_for_degree(const Distribution1D& dist, int degree)
{
    if (degree < 0) throw InvalidArgument("quadrature degree must be nonnegative");
    return gauss_rule(dist, degree + 1);
}

inline constexpr std::size_t default_node_cap = 1'000'000;

/// Full Cartesian product; the last dimension varies fastest.
inline QuadratureRule tensor_grid(const std::vector<QuadratureRule>& rules, std::size_t node_cap = default_node_cap)
{
    if (rules.empty()) throw InvalidArgument("tensor grid needs at least one rule");
    int m = 0;
    double count = 1.0;
    for (const auto& r : rules) {
        if (r.size() < 1) throw InvalidArgument("empty rule in tensor product");
        m += r.dimension();
        count *= static_cast<double>(r.size());
    }
    if (count > static_cast<double>(node_cap))
        throw OversizeError("tensor grid would have " + std::to_string(static_cast<long double>(count)) +
                            " nodes, above the cap of " + std::to_string(node_cap));
    const auto total = static_cast<Eigen::Index>(count);
    QuadratureRule out;
    out.nodes.resize(total, m);
    out.weights.resize(total);
    std::vector<Eigen::Index> idx(rules.size(), 0);
    for (Eigen::Index row = 0; row < total; ++row) {
        double w = 1.0;
        int col = 0;
        for (std::size_t d = 0; d < rules.size(); ++d) {
            const auto& r = rules[d];
            out.nodes.block(row, col, 1, r.dimension()) = r.nodes.row(idx[d]);
            col += r.dimension();
            w *= r.weights[idx[d]];
        }
        out.weights[row] = w;
        for (std::size_t d = rules.size(); d-- > 0;) {
            if (++idx[d] < rules[d].size()) break;
            idx[d] = 0;
        }
    }
    return out;
}

/// Tensor grid of degree-d Gauss rules ((d+1)^m nodes) for a joint distribution.
inline QuadratureRule tensor_grid(const JointDistribution& joint, int degree, std::size_t node_cap = default_node_cap)
{
    std::vector<QuadratureRule> rules;
    for (const auto& c : joint.components) rules.push_back(gauss_rule_for_degree(c, degree));
    return tensor_grid(rules, node_cap);
}

struct SparseGridSpec {
    int level = 0;
    int dimension = 1;
};

namespace detail {

inline double binomial(int n, int k)
{
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// All level multi-indices of length m with entry sum == total.
inline void compositions(int m, int total, std::vector<int>& cur, std::vector<std::vector<int>>& out)
{
    if (static_cast<int>(cur.size()) == m - 1) {
        cur.push_back(total);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int v = total; v >= 0; --v) {
        cur.push_back(v);
        compositions(m, total - v, cur, out);
        cur.pop_back();
    }
}

} // namespace detail

/**
 * Smolyak combination of Gauss tensor rules with 1D point growth n(l) = l + 1:
 * sum over L - m + 1 <= |l| <= L of (-1)^(L - |l|) C(m - 1, L - |l|) Q_l1 x ... x Q_lm.
 * Nodes equal up to round-off are merged by summing weights; nodes come out sorted.
 */
inline QuadratureRule smolyak_grid(const JointDistribution& joint, const SparseGridSpec& spec,
                                   std::size_t node_cap = default_node_cap)
{
    const int m = joint.dimension();
    const int L = spec.level;
    if (L < 0) throw InvalidArgument("sparse grid level must be nonnegative");
    if (spec.dimension != m) throw InvalidArgument("sparse grid dimension does not match the joint distribution");
    std::vector<std::vector<QuadratureRule>> rules(m);
    for (int j = 0; j < m; ++j)
        for (int l = 0; l <= L; ++l) rules[j].push_back(gauss_rule(joint.components[j], l + 1));
    // snap nodes that coincide up to round-off (e.g. the centre of symmetric rules) onto one value
    for (int j = 0; j < m; ++j) {
        const double sd = joint.components[j].stddev();
        std::vector<double> canon;
        for (auto& r : rules[j])
            for (Eigen::Index i = 0; i < r.size(); ++i) {
                double& x = r.nodes(i, 0);
                bool snapped = false;
                for (double c : canon)
                    if (std::abs(x - c) <= 1e-10 * std::max({std::abs(x), std::abs(c), sd})) {
                        x = c;
                        snapped = true;
                        break;
                    }
                if (!snapped) canon.push_back(x);
            }
    }

    std::map<std::vector<double>, double> merged;
    for (int total = std::max(0, L - m + 1); total <= L; ++total) {
        const double coeff = ((L - total) % 2 ? -1.0 : 1.0) * detail::binomial(m - 1, L - total);
        std::vector<std::vector<int>> levels;
        std::vector<int> cur;
        detail::compositions(m, total, cur, levels);
        for (const auto& lv : levels) {
            std::vector<QuadratureRule> factors;
            for (int j = 0; j < m; ++j) factors.push_back(rules[j][lv[j]]);
            const QuadratureRule t = tensor_grid(factors, node_cap);
            for (Eigen::Index i = 0; i < t.size(); ++i) {
                std::vector<double> key(m);
                for (int j = 0; j < m; ++j) key[j] = t.nodes(i, j);
                merged[key] += coeff * t.weights[i];
            }
            if (merged.size() > node_cap) throw OversizeError("sparse grid exceeds the node cap of " + std::to_string(node_cap));
        }
    }
    QuadratureRule out;
    out.nodes.resize(static_cast<Eigen::Index>(merged.size()), m);
    out.weights.resize(static_cast<Eigen::Index>(merged.size()));
    Eigen::Index row = 0;
    for (const auto& [node, w] : merged) {
        for (int j = 0; j < m; ++j) out.nodes(row, j) = node[j];
        out.weights[row] = w;
        ++row;
    }
    return out;
}

/// Columns node_1..node_m, weight (full precision).
inline void write_rule_csv(std::ostream& os, const QuadratureRule& rule)
{
    for (int j = 0; j < rule.dimension(); ++j) os << "node_" << (j + 1) << ',';
    os << "weight\n";
    char buf[64];
    for (Eigen::Index i = 0; i < rule.size(); ++i) {
        for (int j = 0; j < rule.dimension(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,", rule.nodes(i, j));
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", rule.weights[i]);
        os << buf << '\n';
    }
}

} // namespace phonon_uq
