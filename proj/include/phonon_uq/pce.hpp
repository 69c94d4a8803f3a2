#pragma once

#include "phonon_uq/distributions.hpp"
#include "phonon_uq/errors.hpp"
#include "phonon_uq/orthopoly.hpp"
#include "phonon_uq/quadrature.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace phonon_uq {

/// Pairwise (cascade) summation; the reduction order depends only on the length.
inline double pairwise_sum(const double* x, std::size_t n)
{
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

/// Multi-indices with total degree <= p, lexicographic (zero tuple first).
struct MultiIndexSet {
    int m = 0;
    int p = 0;
    std::vector<std::vector<int>> indices;

    std::size_t size() const { return indices.size(); }
};

namespace detail {

inline void enumerate_indices(int pos, int remaining, std::vector<int>& cur, std::vector<std::vector<int>>& out)
{
    if (pos == static_cast<int>(cur.size())) {
        out.push_back(cur);
        return;
    }
    for (int v = 0; v <= remaining; ++v) {
        cur[pos] = v;
        enumerate_indices(pos + 1, remaining - v, cur, out);
    }
    cur[pos] = 0;
}

} // namespace detail

inline MultiIndexSet multi_indices(int m, int p)
{
    if (m < 1) throw InvalidArgument("multi-index dimension must be at least 1");
    if (p < 0) throw InvalidArgument("total degree must be nonnegative");
    MultiIndexSet set{m, p, {}};
    std::vector<int> cur(m, 0);
    detail::enumerate_indices(0, p, cur, set.indices);
    return set;
}

/// Multivariate orthonormal basis Phi_n(x) = prod_j phi_{n_j}(x_j).
struct PCEBasis {
    MultiIndexSet indices;
    std::vector<Recurrence> recurrences; // one per dimension, up to degree p

    PCEBasis() = default;
    PCEBasis(const JointDistribution& joint, int p) : indices(multi_indices(joint.dimension(), p))
    {
        for (const auto& c : joint.components) recurrences.push_back(recurrence_for(c, std::max(p, 1)));
    }

    int dimension() const { return indices.m; }
    int degree() const { return indices.p; }
    std::size_t size() const { return indices.size(); }
};

inline Eigen::VectorXd eval_basis(const PCEBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    const int m = basis.dimension();
    const int p = basis.degree();
    if (x.size() != m) throw InvalidArgument("point dimension does not match the basis");
    Eigen::MatrixXd univariate(m, p + 1);
    std::vector<double> buf(p + 1);
    for (int j = 0; j < m; ++j) {
        eval_orthonormal_all(basis.recurrences[j], p, x[j], buf.data());
        for (int d = 0; d <= p; ++d) univariate(j, d) = buf[d];
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t n = 0; n < basis.size(); ++n) {
        double v = 1.0;
        const auto& idx = basis.indices.indices[n];
        for (int j = 0; j < m; ++j)
            if (idx[j]) v *= univariate(j, idx[j]);
        out[static_cast<Eigen::Index>(n)] = v;
    }
    return out;
}

/// Rows Phi(x_i)^T for each row x_i of `inputs`.
inline Eigen::MatrixXd design_matrix(const PCEBasis& basis, const Eigen::MatrixXd& inputs)
{
    Eigen::MatrixXd a(inputs.rows(), static_cast<Eigen::Index>(basis.size()));
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) a.row(i) = eval_basis(basis, inputs.row(i).transpose()).transpose();
    return a;
}

struct TrainingSet {
    Eigen::MatrixXd inputs;  // n x m
    Eigen::MatrixXd outputs; // n x q
    std::optional<Eigen::VectorXd> weights;
};

enum class FitMethod { mc_projection, least_squares, quadrature };

inline std::string to_string(FitMethod f)
{
    switch (f) {
    case FitMethod::mc_projection: return "mc_projection";
    case FitMethod::least_squares: return "least_squares";
    case FitMethod::quadrature: return "quadrature";
    }
    return "least_squares";
}

inline FitMethod fit_method_from_string(const std::string& s)
{
    if (s == "mc_projection") return FitMethod::mc_projection;
    if (s == "least_squares") return FitMethod::least_squares;
    if (s == "quadrature") return FitMethod::quadrature;
    throw InvalidArgument("unknown fit method '" + s + "'");
}

struct PCESurrogate {
    JointDistribution joint;
    PCEBasis basis;
    Eigen::MatrixXd coefficients; // |indices| x q
    FitMethod method = FitMethod::least_squares;
    std::vector<std::string> output_names;
    std::string training_hash;
    std::uint64_t seed = 0;

    int outputs() const { return static_cast<int>(coefficients.cols()); }
};

namespace detail {

inline void check_training(const TrainingSet& t, const PCEBasis& basis)
{
    if (t.inputs.rows() != t.outputs.rows()) throw InvalidArgument("training inputs and outputs have different row counts");
    if (t.inputs.cols() != basis.dimension()) throw InvalidArgument("training inputs do not match the basis dimension");
    if (t.inputs.rows() < 1) throw InvalidArgument("training set is empty");
    if (!t.outputs.allFinite()) throw InvalidArgument("training outputs contain non-finite values");
}

// a_n = sum_i w_i y_i Phi_n(x_i), pairwise-summed per coefficient.
inline Eigen::MatrixXd weighted_projection(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& y, const Eigen::VectorXd& w)
{
    Eigen::MatrixXd a(phi.cols(), y.cols());
    std::vector<double> terms(static_cast<std::size_t>(phi.rows()));
    for (Eigen::Index n = 0; n < phi.cols(); ++n)
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
            for (Eigen::Index i = 0; i < phi.rows(); ++i) terms[static_cast<std::size_t>(i)] = w[i] * y(i, c) * phi(i, n);
            a(n, c) = pairwise_sum(terms);
        }
    return a;
}

inline PCESurrogate make_surrogate(const JointDistribution& joint, const PCEBasis& basis, Eigen::MatrixXd coeffs, FitMethod method)
{
    PCESurrogate s;
    s.joint = joint;
    s.basis = basis;
    s.coefficients = std::move(coeffs);
    s.method = method;
    for (Eigen::Index c = 0; c < s.coefficients.cols(); ++c) s.output_names.push_back("y" + std::to_string(c + 1));
    return s;
}

} // namespace detail

/// a_n = (1/M) sum_i y_i Phi_n(x_i).
inline PCESurrogate fit_mc_projection(const TrainingSet& train, const JointDistribution& joint, int p)
{
    const PCEBasis basis(joint, p);
    detail::check_training(train, basis);
    if (train.weights) throw InvalidArgument("Monte Carlo projection takes unweighted samples");
    const Eigen::MatrixXd phi = design_matrix(basis, train.inputs);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(train.inputs.rows(), 1.0 / static_cast<double>(train.inputs.rows()));
    return detail::make_surrogate(joint, basis, detail::weighted_projection(phi, train.outputs, w), FitMethod::mc_projection);
}

inline constexpr double max_condition = 1e12;

/// Least-squares collocation via SVD; requires at least |basis| samples.
inline PCESurrogate fit_least_squares(const TrainingSet& train, const JointDistribution& joint, int p)
{
    const PCEBasis basis(joint, p);
    detail::check_training(train, basis);
    const auto n = static_cast<std::size_t>(train.inputs.rows());
    if (n < basis.size()) throw UnderdeterminedError(n, basis.size());
    const Eigen::MatrixXd phi = design_matrix(basis, train.inputs);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
    if (!(cond <= max_condition)) throw ConditioningError(cond);
    return detail::make_surrogate(joint, basis, svd.solve(train.outputs), FitMethod::least_squares);
}

/// Spectral projection with quadrature weights (tensor or sparse rules alike).
inline PCESurrogate fit_quadrature(const QuadratureRule& rule, const Eigen::MatrixXd& outputs, const JointDistribution& joint, int p)
{
    const PCEBasis basis(joint, p);
    TrainingSet t{rule.nodes, outputs, rule.weights};
    detail::check_training(t, basis);
    const Eigen::MatrixXd phi = design_matrix(basis, rule.nodes);
    return detail::make_surrogate(joint, basis, detail::weighted_projection(phi, outputs, rule.weights), FitMethod::quadrature);
}

inline Eigen::VectorXd evaluate(const PCESurrogate& s, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return s.coefficients.transpose() * eval_basis(s.basis, x);
}

struct SurrogateMoments {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

/// Parseval: mean = a_0, variance = sum_{n != 0} a_n^2.
inline SurrogateMoments surrogate_moments(const PCESurrogate& s)
{
    SurrogateMoments out{s.coefficients.row(0).transpose(), Eigen::VectorXd(s.coefficients.cols())};
    for (Eigen::Index c = 0; c < s.coefficients.cols(); ++c) {
        std::vector<double> sq;
        for (Eigen::Index n = 1; n < s.coefficients.rows(); ++n) sq.push_back(s.coefficients(n, c) * s.coefficients(n, c));
        out.variance[c] = pairwise_sum(sq);
    }
    return out;
}

/// Draws X ~ joint with the given seed and returns the surrogate outputs, n x q.
inline Eigen::MatrixXd sample_surrogate(const PCESurrogate& s, std::size_t n, std::uint64_t seed)
{
    const Eigen::MatrixXd x = sample_joint(s.joint, n, seed);
    Eigen::MatrixXd out(x.rows(), s.coefficients.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = evaluate(s, x.row(i).transpose()).transpose();
    return out;
}

inline nlohmann::json to_json(const PCESurrogate& s)
{
    nlohmann::json coeffs = nlohmann::json::array();
    for (Eigen::Index n = 0; n < s.coefficients.rows(); ++n) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < s.coefficients.cols(); ++c) row.push_back(s.coefficients(n, c));
        coeffs.push_back(std::move(row));
    }
    return {{"joint", to_json(s.joint)},
            {"m", s.basis.dimension()},
            {"p", s.basis.degree()},
            {"multi_indices", s.basis.indices.indices},
            {"outputs", s.output_names},
            {"coefficients", std::move(coeffs)},
            {"fit_method", to_string(s.method)},
            {"provenance", {{"training_hash", s.training_hash}, {"seed", s.seed}}}};
}

inline PCESurrogate surrogate_from_json(const nlohmann::json& j)
{
    try {
        PCESurrogate s;
        s.joint = joint_from_json(j.at("joint"));
        const int m = j.at("m").get<int>();
        const int p = j.at("p").get<int>();
        if (m != s.joint.dimension()) throw InvalidArgument("surrogate dimension does not match its joint distribution");
        s.basis = PCEBasis(s.joint, p);
        if (j.at("multi_indices").get<std::vector<std::vector<int>>>() != s.basis.indices.indices)
            throw InvalidArgument("surrogate multi-index list does not match the canonical order");
        const auto& rows = j.at("coefficients");
        if (rows.size() != s.basis.size()) throw InvalidArgument("coefficient rows do not match the basis size");
        s.output_names = j.at("outputs").get<std::vector<std::string>>();
        s.coefficients.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(s.output_names.size()));
        for (std::size_t n = 0; n < rows.size(); ++n) {
            if (rows[n].size() != s.output_names.size()) throw InvalidArgument("coefficient row has the wrong width");
            for (std::size_t c = 0; c < s.output_names.size(); ++c)
                s.coefficients(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c)) = rows[n][c].get<double>();
        }
        if (!s.coefficients.allFinite()) throw InvalidArgument("non-finite surrogate coefficient");
        s.method = fit_method_from_string(j.at("fit_method").get<std::string>());
        if (j.contains("provenance")) {
            s.training_hash = j["provenance"].value("training_hash", "");
            s.seed = j["provenance"].value("seed", std::uint64_t{0});
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed surrogate file: ") + e.what());
    }
}

} // namespace phonon_uq
