// Acceptance run: one PASS/FAIL line per criterion.
//   acceptance [--only 1,2,...] [--cache-dir DIR] [--out-dir DIR]

#include "phonon_uq/phonon_uq.hpp"

#include <CLI11.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

using namespace phonon_uq;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = PHONON_UQ_SOURCE_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Options {
    fs::path cache_dir;
    fs::path out_dir = "acceptance-out";
    std::vector<int> only;
};

std::string num(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

struct Family {
    std::string name;
    Distribution1D dist;
    std::function<double(int)> moment;
};

std::vector<Family> families()
{
    auto beta_moment = [](double a, double b) {
        return [a, b](int k) {
            double r = 1;
            for (int i = 0; i < k; ++i) r *= (a + i) / (a + b + i);
            return r;
        };
    };
    const auto k_soft = gamma_from_mean_cov(278e6, 0.08);
    const auto fp = beta_from_mean_std(0.025, 0.002);
    const double ka = k_soft.param1(), kt = k_soft.param2();
    return {
        {"uniform", Distribution1D::uniform(-1, 1), [](int k) { return k % 2 ? 0.0 : 1.0 / (k + 1); }},
        {"normal", Distribution1D::normal(0, 1),
         [](int k) {
             double r = k % 2 ? 0.0 : 1.0;
             for (int i = k - 1; i > 1 && r != 0.0; i -= 2) r *= i;
             return r;
         }},
        {"gamma", k_soft, [ka, kt](int k) { return std::exp(k * std::log(kt) + boost::math::lgamma(ka + k) - boost::math::lgamma(ka)); }},
        {"beta", fp, beta_moment(fp.param1(), fp.param2())},
        {"beta(2,5)", Distribution1D::beta(2, 5), beta_moment(2, 5)},
    };
}

JointDistribution table_joint() { return load_config(source_dir / "configs" / "study-7d-gamma.json").inputs; }

Outcome sampling_counts()
{
    const auto j7 = table_joint();
    const auto n1 = plan_points(j7, {SamplingPlan::Kind::quadrature, 0, 1, 1}, 0).x.rows();
    const auto n2 = plan_points(j7, {SamplingPlan::Kind::quadrature, 0, 2, 1}, 0).x.rows();
    const auto s1 = plan_points(j7, {SamplingPlan::Kind::sparse, 0, 1, 1}, 0).x.rows();
    const JointDistribution u({Distribution1D::uniform(160e6, 240e6)}, {"E_soft"});
    bool ok = n1 == 128 && n2 == 2187 && s1 == 15;
    std::string d = "tensor " + std::to_string(n1) + "/" + std::to_string(n2) + ", sparse " + std::to_string(s1) + ", 1D";
    for (int deg = 2; deg <= 5; ++deg) {
        const auto n = plan_points(u, {SamplingPlan::Kind::quadrature, 0, deg, 1}, 0).x.rows();
        ok = ok && n == deg + 1;
        d += " " + std::to_string(n);
    }
    return {ok, d};
}

Outcome orthonormality()
{
    double worst = 0;
    for (const auto& f : families()) {
        const auto rec = recurrence_for(f.dist, 6);
        const auto q = gauss_rule(f.dist, 64);
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(7, 7);
        std::vector<double> phi(7);
        for (Eigen::Index i = 0; i < q.size(); ++i) {
            eval_orthonormal_all(rec, 6, q.nodes(i, 0), phi.data());
            for (int a = 0; a < 7; ++a)
                for (int b = 0; b < 7; ++b) g(a, b) += q.weights[i] * phi[a] * phi[b];
        }
        worst = std::max(worst, (g - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff());
    }
    // truncated normal: Stieltjes recurrence checked by adaptive integration of its pdf
    const auto tn = truncate_sigmas(Distribution1D::normal(200e6, 16e6), 2.0);
    const auto rec = stieltjes(tn, 6);
    double worst_tn = 0;
    for (int a = 0; a <= 6; ++a)
        for (int b = a; b <= 6; ++b) {
            auto f = [&](double x) { return tn.pdf(x) * eval_orthonormal(rec, a, x) * eval_orthonormal(rec, b, x); };
            const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, tn.lower(), tn.upper(), 15, 1e-14);
            worst_tn = std::max(worst_tn, std::abs(v - (a == b ? 1.0 : 0.0)));
        }
    return {worst < 1e-8 && worst_tn < 1e-6, "max |G-I| " + num(worst) + ", truncated normal " + num(worst_tn)};
}

Outcome quadrature_exactness()
{
    double worst = 0;
    for (const auto& f : families())
        for (int n = 1; n <= 8; ++n) {
            const auto q = gauss_rule(f.dist, n);
            for (int k = 0; k <= 2 * n - 1; ++k) {
                double s = 0;
                for (Eigen::Index i = 0; i < q.size(); ++i) s += q.weights[i] * std::pow(q.nodes(i, 0), k);
                const double exact = f.moment(k);
                // vanishing odd moments are measured against the next even one
                const double scale = exact != 0.0 ? std::abs(exact) : std::abs(f.moment(k + 1));
                worst = std::max(worst, std::abs(s - exact) / scale);
            }
        }
    return {worst < 1e-9, "max relative moment error " + num(worst)};
}

Outcome pce_recovery()
{
    const auto joint = table_joint();
    const PCEBasis basis(joint, 2);
    std::mt19937_64 g(7);
    std::normal_distribution<double> nd;
    Eigen::VectorXd c(static_cast<Eigen::Index>(basis.size()));
    for (auto& v : c) v = nd(g);
    const auto rule = tensor_grid(joint, 2);
    Eigen::MatrixXd y(rule.size(), 1);
    for (Eigen::Index i = 0; i < rule.size(); ++i) y(i, 0) = eval_basis(basis, rule.nodes.row(i).transpose()).dot(c);
    const auto s = fit_quadrature(rule, y, joint, 2);
    const double coef_err = (s.coefficients.col(0) - c).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd x = sample_joint(joint, 100, 8);
    double eval_err = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double truth = eval_basis(basis, x.row(i).transpose()).dot(c);
        eval_err = std::max(eval_err, std::abs(evaluate(s, x.row(i).transpose())[0] - truth) / std::max(1.0, std::abs(truth)));
    }
    return {coef_err < 1e-8 && eval_err < 1e-8, "coefficient error " + num(coef_err) + ", evaluation error " + num(eval_err)};
}

Outcome fem_oracle()
{
    const auto soft = ElasticMaterial::from_bulk_shear(278e6, 72.5e6, 1000);
    const double a = 0.1;
    const UnitCellSpec cell{UnitCellBitmap::filled(32, Material::soft), {soft, soft}, a};
    const double k = 0.05 * std::numbers::pi / a;
    const auto sol = solve_bands(assemble_operators(cell, {k, 0}), 4);
    const double cs = 2 * std::numbers::pi * sol.frequencies[0] / k;
    const double cl = 2 * std::numbers::pi * sol.frequencies[1] / k;
    const double lambda = soft.bulk - 2 * soft.shear / 3;
    const double cs0 = std::sqrt(soft.shear / soft.density), cl0 = std::sqrt((lambda + 2 * soft.shear) / soft.density);
    return {rel(cs, cs0) < 0.02 && rel(cl, cl0) < 0.02,
            "shear " + num(cs) + " vs " + num(cs0) + ", longitudinal " + num(cl) + " vs " + num(cl0) + " m/s"};
}

RunContext context(const fs::path& out, EvalCache* cache)
{
    RunContext ctx;
    ctx.out_dir = out;
    ctx.cache = cache;
    ctx.log = Logger(&std::cerr, false);
    return ctx;
}

Outcome study_1d(const Options& o, EvalCache* cache)
{
    const auto c = load_config(source_dir / "configs" / "study-1d-uniform.json");
    const auto r = run_uq_study(c, context(o.out_dir / "study-1d-uniform", cache));
    bool ok = r.reports.size() == 4;
    std::string d = "gap-size KS";
    for (const auto& rep : r.reports) {
        const double ks = rep.comparisons.empty() ? std::nan("") : rep.comparisons[0].metrics.ks_statistic;
        ok = ok && rep.status == "ok" && ks < 0.05;
        d += " " + rep.name + "=" + num(ks);
    }
    return {ok, d};
}

Outcome study_7d(const Options& o, EvalCache* cache)
{
    const auto c = load_config(source_dir / "configs" / "study-7d-gamma.json");
    const auto r = run_uq_study(c, context(o.out_dir / "study-7d-gamma", cache));
    const auto* sparse = r.report("sparse1_p1");
    const auto* quad = r.report("quad1_p1");
    if (!sparse || !quad || sparse->comparisons.empty() || quad->comparisons.empty()) return {false, "surrogate fit failed"};
    bool ok = true;
    std::string d;
    for (const auto& cmp : sparse->comparisons) {
        const auto& m = cmp.metrics;
        ok = ok && m.mean_rel_err < 0.05 && m.std_rel_err < 0.20 && m.ks_statistic < 0.12;
        d += "sparse15 " + cmp.output + " mean " + num(m.mean_rel_err) + " std " + num(m.std_rel_err) + " KS " + num(m.ks_statistic) + "; ";
    }
    for (const auto& cmp : quad->comparisons) {
        ok = ok && cmp.metrics.ks_statistic < 0.08;
        d += "tensor128 " + cmp.output + " KS " + num(cmp.metrics.ks_statistic) + "; ";
    }
    d += std::to_string(r.truth.failures()) + " failed truth rows";
    return {ok, d};
}

Outcome resolution_convergence(const Options& o, EvalCache* cache)
{
    const auto c = load_config(source_dir / "configs" / "resolution-convergence.json");
    const auto r = run_resolution_convergence(c, context(o.out_dir / "resolution-convergence", cache));
    std::map<int, double> mean;
    std::string d = "mean gap size";
    for (const auto& row : r.rows) {
        mean[row.resolution] = row.summary.mean_size;
        d += " r" + std::to_string(row.resolution) + "=" + num(row.summary.mean_size);
    }
    if (!mean.count(10) || !mean.count(20) || !mean.count(30) || !mean.count(40)) return {false, d + " (missing resolutions)"};
    const double coarse = std::abs(mean[20] - mean[10]), fine = std::abs(mean[40] - mean[30]);
    return {fine < coarse, d + " Hz; |d(30,40)| " + num(fine) + " vs |d(10,20)| " + num(coarse)};
}

Outcome pseudo_determinism(const Options& o, EvalCache* cache)
{
    const auto c = load_config(source_dir / "configs" / "fp-noise.json");
    const auto r = run_fp_noise(c, context(o.out_dir / "fp-noise", cache));
    return {r.ratio_size <= 0.25, "same-FP std " + num(r.sweep_noise.summary.std_size) + " Hz, sweep std " +
                                      num(r.sweep.pooled.std_size) + " Hz, ratio " + num(r.ratio_size) + " (needs <= 0.25)"};
}

// independent edge test: a 4-neighbour inside the grid with the other material
bool is_edge(const UnitCellBitmap& b, int r, int c)
{
    const int n = b.resolution();
    const std::pair<int, int> nb[] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (auto [rr, cc] : nb)
        if (rr >= 0 && rr < n && cc >= 0 && cc < n && b.at(rr, cc) != b.at(r, c)) return true;
    return false;
}

Outcome defect_properties()
{
    std::mt19937_64 g(10);
    int bad = 0;
    for (int t = 0; t < 200; ++t) {
        const int n = 4 + static_cast<int>(g() % 37);
        std::vector<std::uint8_t> cells(static_cast<std::size_t>(n) * n);
        const double p = std::uniform_real_distribution<double>(0.1, 0.9)(g);
        for (auto& v : cells) v = std::uniform_real_distribution<double>()(g) < p;
        const UnitCellBitmap b(n, cells);
        const double fp = t % 10 == 0 ? (t % 20 == 0 ? 0.0 : 1.0) : std::uniform_real_distribution<double>()(g);
        const std::uint64_t seed = g();
        std::size_t edges = 0;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) edges += is_edge(b, r, c);
        const UnitCellBitmap d = apply_defects(b, {fp, seed});
        std::size_t flips = 0;
        bool inside = true;
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                if (d.at(r, c) != b.at(r, c)) {
                    ++flips;
                    inside = inside && is_edge(b, r, c);
                }
        const auto expected = static_cast<std::size_t>(std::floor(fp * static_cast<double>(edges) + 0.5));
        const bool repeat = apply_defects(b, {fp, seed}).cells() == d.cells();
        bad += !(flips == expected && inside && repeat);
    }
    return {bad == 0, std::to_string(200 - bad) + "/200 triples with exact count, edge-only flips and repeatable output"};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// every CSV under a must exist in b with the same bytes
std::pair<std::size_t, std::size_t> compare_csvs(const fs::path& a, const fs::path& b)
{
    std::size_t same = 0, total = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.path().extension() != ".csv") continue;
        ++total;
        const fs::path other = b / fs::relative(e.path(), a);
        same += fs::exists(other) && slurp(e.path()) == slurp(other);
    }
    return {same, total};
}

Outcome rerun_determinism(const Options& o, EvalCache* cache, const std::set<int>& ran)
{
    std::size_t same = 0, total = 0;
    std::string d;
    auto check = [&](const std::string& name, const fs::path& first, const fs::path& second) {
        const auto [s, t] = compare_csvs(first, second);
        same += s;
        total += t;
        d += name + " " + std::to_string(s) + "/" + std::to_string(t) + "; ";
    };
    // fresh solves without a cache, run twice
    ExperimentConfig small = load_config(source_dir / "configs" / "study-1d-uniform.json");
    small.geometry.resolution = 8;
    small.k_per_segment = 4;
    small.study["truth"]["n"] = 60;
    small.study["draws"] = 2000;
    const fs::path tiny = o.out_dir / "rerun" / "tiny";
    fs::remove_all(tiny);
    (void)run_uq_study(small, context(tiny / "a", nullptr));
    (void)run_uq_study(small, context(tiny / "b", nullptr));
    check("uncached 1D study", tiny / "a", tiny / "b");

    ExperimentConfig noise = load_config(source_dir / "configs" / "fp-noise.json");
    noise.study["resolutions"] = {8};
    noise.study["sweep_resolution"] = 8;
    noise.study["realizations"] = 4;
    noise.study["sweep_realizations"] = 2;
    noise.k_per_segment = 4;
    (void)run_fp_noise(noise, context(tiny / "noise_a", nullptr));
    (void)run_fp_noise(noise, context(tiny / "noise_b", nullptr));
    check("uncached fp-noise", tiny / "noise_a", tiny / "noise_b");

    // the full studies of this run, repeated against the same cache
    auto rerun = [&](int id, const char* name, const std::function<void(const RunContext&)>& run) {
        if (!ran.count(id)) return;
        const fs::path again = o.out_dir / "rerun" / name;
        fs::remove_all(again);
        run(context(again, cache));
        check(name, o.out_dir / name, again);
    };
    auto cfg = [](const char* name) { return load_config(source_dir / "configs" / (std::string(name) + ".json")); };
    rerun(6, "study-1d-uniform", [&](const RunContext& ctx) { (void)run_uq_study(cfg("study-1d-uniform"), ctx); });
    rerun(7, "study-7d-gamma", [&](const RunContext& ctx) { (void)run_uq_study(cfg("study-7d-gamma"), ctx); });
    rerun(8, "resolution-convergence", [&](const RunContext& ctx) { (void)run_resolution_convergence(cfg("resolution-convergence"), ctx); });
    rerun(9, "fp-noise", [&](const RunContext& ctx) { (void)run_fp_noise(cfg("fp-noise"), ctx); });
    return {total > 0 && same == total, d + std::to_string(same) + "/" + std::to_string(total) + " CSV files identical"};
}

} // namespace

int main(int argc, char** argv)
{
    Options o;
    CLI::App app{"acceptance criteria"};
    std::string cache_dir, out_dir = o.out_dir.string();
    app.add_option("--only", o.only, "criteria to run (default: all)")->delimiter(',');
    app.add_option("--cache-dir", cache_dir, "dispersion cache shared by the study criteria");
    app.add_option("--out-dir", out_dir, "study output directory");
    CLI11_PARSE(app, argc, argv);
    o.out_dir = out_dir;

    std::unique_ptr<EvalCache> cache;
    if (!cache_dir.empty()) cache = std::make_unique<EvalCache>(cache_dir);
    std::set<int> ran;

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"sampling-plan counts", sampling_counts},
        {"orthonormality", orthonormality},
        {"quadrature exactness", quadrature_exactness},
        {"PCE exact recovery", pce_recovery},
        {"FEM analytic oracle", fem_oracle},
        {"1D uniform study", [&] { return study_1d(o, cache.get()); }},
        {"7D gamma study", [&] { return study_7d(o, cache.get()); }},
        {"resolution convergence", [&] { return resolution_convergence(o, cache.get()); }},
        {"pseudo-determinism", [&] { return pseudo_determinism(o, cache.get()); }},
        {"defect generator", defect_properties},
        {"end-to-end determinism", [&] { return rerun_determinism(o, cache.get(), ran); }},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!o.only.empty() && std::find(o.only.begin(), o.only.end(), id) == o.only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome r;
        try {
            r = criteria[i].second();
            ran.insert(id);
        } catch (const std::exception& e) {
            r = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !r.pass;
        std::cout << (r.pass ? "PASS" : "FAIL") << ' ' << id << ' ' << criteria[i].first << ": " << r.detail << " [" << num(secs) << " s]"
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
