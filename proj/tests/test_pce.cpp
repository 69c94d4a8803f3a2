#include "phonon_uq/pce.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace phonon_uq;

namespace {

double binom(int n, int k)
{
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

JointDistribution mixed3()
{
    return JointDistribution({Distribution1D::uniform(-1, 1), Distribution1D::gamma(4, 0.5), Distribution1D::beta(2, 3)}, {"a", "b", "c"});
}

JointDistribution uniform1() { return JointDistribution({Distribution1D::uniform(-1, 1)}, {"x"}); }

// polynomial of total degree <= 3 in three variables
double poly(const Eigen::VectorXd& x) { return 1.5 - 2 * x[0] + x[1] * x[2] + 0.5 * x[0] * x[0] * x[1] - x[2] * x[2] * x[2]; }

Eigen::MatrixXd apply(const Eigen::MatrixXd& pts, const std::function<double(const Eigen::VectorXd&)>& f)
{
    Eigen::MatrixXd y(pts.rows(), 1);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) y(i, 0) = f(pts.row(i).transpose());
    return y;
}

} // namespace

TEST(MultiIndices, CountsAndOrder)
{
    EXPECT_EQ(multi_indices(1, 5).size(), 6u);
    EXPECT_EQ(multi_indices(7, 1).size(), 8u);
    EXPECT_EQ(multi_indices(7, 2).size(), 36u);
    for (int m = 1; m <= 6; ++m)
        for (int p = 0; p <= 4; ++p) {
            const auto s = multi_indices(m, p);
            EXPECT_EQ(static_cast<double>(s.size()), binom(m + p, p));
            EXPECT_EQ(s.indices.front(), std::vector<int>(m, 0));
            // exhaustive enumeration oracle
            std::set<std::vector<int>> all;
            std::vector<int> cur(m, 0);
            for (;;) {
                int tot = 0;
                for (int v : cur) tot += v;
                if (tot <= p) all.insert(cur);
                int j = 0;
                while (j < m && ++cur[j] > p) cur[j++] = 0;
                if (j == m) break;
            }
            EXPECT_EQ(std::set<std::vector<int>>(s.indices.begin(), s.indices.end()), all);
        }
}

TEST(EvalBasis, ConstantAndOrthonormal)
{
    const auto j = JointDistribution({Distribution1D::normal(1, 2), Distribution1D::beta(2, 5)}, {});
    const PCEBasis basis(j, 3);
    EXPECT_EQ(basis.size(), 10u);
    Eigen::Vector2d x(0.3, 0.4);
    const auto phi = eval_basis(basis, x);
    EXPECT_EQ(phi.size(), 10);
    EXPECT_EQ(phi[0], 1.0);
    const auto q = tensor_grid(j, 8);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(10, 10);
    for (Eigen::Index i = 0; i < q.size(); ++i) {
        const Eigen::VectorXd v = eval_basis(basis, q.nodes.row(i).transpose());
        g += q.weights[i] * v * v.transpose();
    }
    EXPECT_LT((g - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitMcProjection, ConstantModel)
{
    const auto j = mixed3();
    const std::size_t n = 10000;
    const Eigen::MatrixXd x = sample_joint(j, n, 1);
    const auto s = fit_mc_projection({x, Eigen::MatrixXd::Constant(n, 1, 4.2), std::nullopt}, j, 2);
    EXPECT_NEAR(s.coefficients(0, 0), 4.2, 1e-12);
    // a_n estimates c * E[Phi_n] = 0 with standard error c / sqrt(M)
    for (Eigen::Index k = 1; k < s.coefficients.rows(); ++k) EXPECT_LT(std::abs(s.coefficients(k, 0)), 3 * 4.2 / std::sqrt(double(n)));
}

TEST(FitMcProjection, RecoversBasisFunctionAndQuadratic)
{
    const auto j = mixed3();
    const PCEBasis basis(j, 2);
    const Eigen::MatrixXd x = sample_joint(j, 20000, 2);
    const Eigen::MatrixXd y = apply(x, [&](const Eigen::VectorXd& v) { return eval_basis(basis, v)[1]; });
    const auto s = fit_mc_projection({x, y, std::nullopt}, j, 2);
    // standard error of the mean of Phi_1^2
    const Eigen::ArrayXd sq = y.array().square();
    const double se = std::sqrt((sq - sq.mean()).square().mean() / x.rows());
    EXPECT_NEAR(s.coefficients(1, 0), 1.0, 4 * se);

    const auto u = uniform1();
    const Eigen::MatrixXd xu = sample_joint(u, 100000, 3);
    const auto su = fit_mc_projection({xu, xu.array().square().matrix(), std::nullopt}, u, 2);
    EXPECT_NEAR(su.coefficients(0, 0) / (1.0 / 3), 1.0, 0.01);
    EXPECT_NEAR(su.coefficients(2, 0) / (2.0 / (3 * std::sqrt(5.0))), 1.0, 0.01);
    EXPECT_THROW(fit_mc_projection({xu, xu, Eigen::VectorXd::Ones(xu.rows())}, u, 2), InvalidArgument);
}

TEST(FitLeastSquares, ExactRecoveryAndErrors)
{
    const auto j = mixed3();
    const auto n_terms = multi_indices(3, 3).size();
    const Eigen::MatrixXd x = sample_joint(j, 2 * n_terms, 4);
    const auto s = fit_least_squares({x, apply(x, poly), std::nullopt}, j, 3);
    const Eigen::MatrixXd test = sample_joint(j, 100, 5);
    for (Eigen::Index i = 0; i < test.rows(); ++i) {
        const Eigen::VectorXd v = test.row(i).transpose();
        EXPECT_NEAR(evaluate(s, v)[0], poly(v), 1e-8 * std::max(1.0, std::abs(poly(v))));
    }
    const Eigen::MatrixXd xs = sample_joint(j, n_terms - 1, 6);
    EXPECT_THROW(fit_least_squares({xs, apply(xs, poly), std::nullopt}, j, 3), UnderdeterminedError);
    // 10 samples cannot determine the 36 second-degree terms in seven dimensions
    std::vector<Distribution1D> c7(7, Distribution1D::uniform(0, 1));
    const JointDistribution j7(c7, {});
    const Eigen::MatrixXd x7 = sample_joint(j7, 10, 7);
    EXPECT_THROW(fit_least_squares({x7, Eigen::MatrixXd::Ones(10, 1), std::nullopt}, j7, 2), UnderdeterminedError);
    // duplicated rows make the design matrix rank deficient
    Eigen::MatrixXd dup(40, 3);
    for (int i = 0; i < 40; ++i) dup.row(i) = x.row(i % 3);
    EXPECT_THROW(fit_least_squares({dup, apply(dup, poly), std::nullopt}, j, 2), ConditioningError);

    const auto c = fit_least_squares({x, Eigen::MatrixXd::Constant(x.rows(), 1, -7.0), std::nullopt}, j, 3);
    EXPECT_NEAR(c.coefficients(0, 0), -7.0, 1e-10);
    EXPECT_LT(c.coefficients.bottomRows(c.coefficients.rows() - 1).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FitQuadrature, BasisFunctionConstantAndQuadratic)
{
    const auto j = mixed3();
    const int p = 3;
    const PCEBasis basis(j, p);
    // tensor rule with p + 1 points per dimension is exact to degree 2p + 1 >= p + deg(Phi_k)
    const auto rule = tensor_grid(j, p);
    for (std::size_t k = 0; k < basis.size(); k += 3) {
        const Eigen::MatrixXd y = apply(rule.nodes, [&](const Eigen::VectorXd& v) { return eval_basis(basis, v)[k]; });
        const auto s = fit_quadrature(rule, y, j, p);
        for (Eigen::Index n = 0; n < s.coefficients.rows(); ++n)
            EXPECT_NEAR(s.coefficients(n, 0), n == static_cast<Eigen::Index>(k) ? 1.0 : 0.0, 1e-9);
    }
    const auto c = fit_quadrature(rule, Eigen::MatrixXd::Constant(rule.size(), 1, 3.3), j, p);
    EXPECT_NEAR(c.coefficients(0, 0), 3.3, 1e-13);

    const auto u = uniform1();
    const auto g3 = gauss_rule(u.components[0], 3);
    const auto sq = fit_quadrature(g3, g3.nodes.array().square().matrix(), u, 2);
    EXPECT_NEAR(sq.coefficients(0, 0), 1.0 / 3, 1e-12);
    EXPECT_NEAR(sq.coefficients(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(sq.coefficients(2, 0), 2.0 / (3 * std::sqrt(5.0)), 1e-12);
}

TEST(FitQuadrature, ExactPolynomialRecovery)
{
    const auto j = mixed3();
    const auto rule = tensor_grid(j, 3);
    const auto s = fit_quadrature(rule, apply(rule.nodes, poly), j, 3);
    const auto ls = fit_least_squares({rule.nodes, apply(rule.nodes, poly), std::nullopt}, j, 3);
    EXPECT_LT((s.coefficients - ls.coefficients).cwiseAbs().maxCoeff(), 1e-9);
    const Eigen::MatrixXd test = sample_joint(j, 100, 8);
    for (Eigen::Index i = 0; i < test.rows(); ++i) {
        const Eigen::VectorXd v = test.row(i).transpose();
        EXPECT_LE(std::abs(evaluate(s, v)[0] - poly(v)), 1e-8 * std::max(1.0, std::abs(poly(v))));
    }
    for (Eigen::Index i = 0; i < rule.size(); i += 7) {
        const Eigen::VectorXd v = rule.nodes.row(i).transpose();
        EXPECT_NEAR(evaluate(s, v)[0], poly(v), 1e-8 * std::max(1.0, std::abs(poly(v))));
    }
}

TEST(FitQuadrature, SparseGridRecoversLinearModel)
{
    std::vector<Distribution1D> c7;
    for (int d = 0; d < 7; ++d) c7.push_back(gamma_from_mean_cov(1.0 + d, 0.08));
    const JointDistribution j7(c7, {});
    const auto rule = smolyak_grid(j7, {1, 7});
    auto lin = [](const Eigen::VectorXd& v) { return 2.0 + v.sum() - 3 * v[4]; };
    const auto s = fit_quadrature(rule, apply(rule.nodes, lin), j7, 1);
    const Eigen::MatrixXd test = sample_joint(j7, 50, 9);
    for (Eigen::Index i = 0; i < test.rows(); ++i) {
        const Eigen::VectorXd v = test.row(i).transpose();
        EXPECT_NEAR(evaluate(s, v)[0], lin(v), 1e-8 * std::abs(lin(v)));
    }
}

TEST(FitMethods, McProjectionAgreesWithQuadratureInTheLimit)
{
    const auto u = JointDistribution({Distribution1D::normal(0.5, 0.3)}, {});
    auto f = [](const Eigen::VectorXd& v) { return std::exp(v[0]); };
    const auto q = fit_quadrature(gauss_rule(u.components[0], 12), apply(gauss_rule(u.components[0], 12).nodes, f), u, 2);
    const std::size_t n = 1'000'000;
    const Eigen::MatrixXd x = sample_joint(u, n, 10);
    const Eigen::MatrixXd y = apply(x, f);
    const auto mc = fit_mc_projection({x, y, std::nullopt}, u, 2);
    const PCEBasis basis(u, 2);
    const Eigen::MatrixXd phi = design_matrix(basis, x);
    for (int k = 0; k <= 2; ++k) {
        const Eigen::ArrayXd t = phi.col(k).array() * y.col(0).array();
        const double se = std::sqrt((t - t.mean()).square().mean() / double(n));
        EXPECT_LT(std::abs(mc.coefficients(k, 0) - q.coefficients(k, 0)), 5 * se) << "a_" << k;
    }
}

TEST(SurrogateMoments, ParsevalAndTruncation)
{
    const auto j = mixed3();
    PCESurrogate s = detail::make_surrogate(j, PCEBasis(j, 2), Eigen::MatrixXd::Zero(10, 1), FitMethod::quadrature);
    s.coefficients(0, 0) = 1;
    EXPECT_EQ(surrogate_moments(s).variance[0], 0.0);
    s.coefficients(1, 0) = 2;
    EXPECT_EQ(surrogate_moments(s).mean[0], 1.0);
    EXPECT_EQ(surrogate_moments(s).variance[0], 4.0);

    std::mt19937_64 g(4);
    std::normal_distribution<double> nd;
    for (Eigen::Index k = 0; k < 10; ++k) s.coefficients(k, 0) = nd(g);
    const double v = surrogate_moments(s).variance[0];
    std::vector<double> tail(s.coefficients.data() + 1, s.coefficients.data() + 10);
    for (int t = 0; t < 20; ++t) {
        std::shuffle(tail.begin(), tail.end(), g);
        PCESurrogate p = s;
        for (int k = 0; k < 9; ++k) p.coefficients(k + 1, 0) = tail[k];
        EXPECT_NEAR(surrogate_moments(p).variance[0], v, 1e-14 * v);
    }
    const Eigen::MatrixXd draws = sample_surrogate(s, 1'000'000, 12);
    const double mean = draws.mean();
    const double var = (draws.array() - mean).square().mean();
    EXPECT_NEAR(var / v, 1.0, 0.01);

    // the captured variance of a smooth model grows towards its total as p increases
    const auto u = JointDistribution({Distribution1D::uniform(-1, 1)}, {});
    auto f = [](const Eigen::VectorXd& x) { return std::exp(1.5 * x[0]); };
    const auto rule = gauss_rule(u.components[0], 20);
    const double total = (std::exp(3.0) - std::exp(-3.0)) / 6.0 - std::pow((std::exp(1.5) - std::exp(-1.5)) / 3.0, 2);
    double prev_err = 1e300;
    for (int p = 1; p <= 4; ++p) {
        const auto sp = fit_quadrature(rule, apply(rule.nodes, f), u, p);
        const double err = total - surrogate_moments(sp).variance[0];
        EXPECT_GT(err, 0.0);
        EXPECT_LT(err, prev_err);
        prev_err = err;
    }
}

TEST(Evaluate, ConstantAndLinearInCoefficients)
{
    const auto j = mixed3();
    PCESurrogate s = detail::make_surrogate(j, PCEBasis(j, 2), Eigen::MatrixXd::Zero(10, 2), FitMethod::quadrature);
    s.coefficients(0, 0) = 5;
    s.coefficients(0, 1) = -1;
    const Eigen::MatrixXd x = sample_joint(j, 20, 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::VectorXd y = evaluate(s, x.row(i).transpose());
        EXPECT_EQ(y[0], 5);
        EXPECT_EQ(y[1], -1);
    }
    std::mt19937_64 g(2);
    std::normal_distribution<double> nd;
    for (Eigen::Index k = 0; k < s.coefficients.size(); ++k) s.coefficients.data()[k] = nd(g);
    PCESurrogate twice = s;
    twice.coefficients *= 2;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const Eigen::VectorXd v = x.row(i).transpose();
        EXPECT_LT((evaluate(twice, v) - 2 * evaluate(s, v)).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_THROW(evaluate(s, Eigen::VectorXd::Zero(2)), InvalidArgument);
}

TEST(SampleSurrogate, ConstantDeterministicAndMean)
{
    const auto j = mixed3();
    PCESurrogate s = detail::make_surrogate(j, PCEBasis(j, 1), Eigen::MatrixXd::Zero(4, 1), FitMethod::quadrature);
    s.coefficients(0, 0) = 2.5;
    EXPECT_TRUE((sample_surrogate(s, 50, 3).array() == 2.5).all());
    s.coefficients(1, 0) = 0.7;
    s.coefficients(3, 0) = -0.4;
    EXPECT_EQ(sample_surrogate(s, 100, 9), sample_surrogate(s, 100, 9));
    EXPECT_NE(sample_surrogate(s, 100, 9), sample_surrogate(s, 100, 10));
    const std::size_t n = 100000;
    const Eigen::MatrixXd d = sample_surrogate(s, n, 4);
    const double sd = std::sqrt(surrogate_moments(s).variance[0]);
    EXPECT_LT(std::abs(d.mean() - 2.5), 4 * sd / std::sqrt(double(n)));
}

TEST(SurrogateJson, RoundTripIsExact)
{
    const auto j = mixed3();
    const auto rule = tensor_grid(j, 2);
    Eigen::MatrixXd y(rule.size(), 2);
    y.col(0) = apply(rule.nodes, poly);
    y.col(1) = rule.nodes.col(1);
    auto s = fit_quadrature(rule, y, j, 2);
    s.output_names = {"gap_size_hz", "gap_center_hz"};
    s.training_hash = "abc";
    s.seed = 17;
    const auto back = surrogate_from_json(nlohmann::json::parse(to_json(s).dump()));
    EXPECT_EQ(back.coefficients, s.coefficients);
    EXPECT_EQ(back.joint, s.joint);
    EXPECT_EQ(back.output_names, s.output_names);
    EXPECT_EQ(back.training_hash, "abc");
    EXPECT_EQ(back.seed, 17u);
    EXPECT_EQ(back.method, FitMethod::quadrature);
    auto bad = to_json(s);
    bad["coefficients"].erase(0);
    EXPECT_THROW(surrogate_from_json(bad), InvalidArgument);
}
