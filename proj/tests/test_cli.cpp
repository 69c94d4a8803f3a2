#include "phonon_uq/phonon_uq.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace phonon_uq;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = PHONON_UQ_SOURCE_DIR;
const fs::path cli = PHONON_UQ_CLI;

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("phonon_uq_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

RunContext quiet_context(const fs::path& out)
{
    RunContext ctx;
    ctx.out_dir = out;
    ctx.log = Logger(nullptr);
    return ctx;
}

ExperimentConfig gamma7_config()
{
    ExperimentConfig c = load_config(source_dir / "configs" / "study-7d-gamma.json");
    c.geometry.resolution = 8;
    c.k_per_segment = 3;
    c.n_bands = 6;
    return c;
}

// cheap stand-in for the FEM: a smooth function of the materials and geometry
GapOutcome fake_gap(const UnitCellBitmap& geo, const MaterialPair& m)
{
    const double size = 1e-3 * m.soft.shear_velocity() * (1.0 + 0.1 * geo.hard_fraction());
    const double center = 1e-3 * m.hard.longitudinal_velocity() + 1e-2 * m.soft.density;
    GapOutcome o;
    o.gap = BandGap{3, center - 0.5 * size, center + 0.5 * size};
    return o;
}

RowEvaluator fake_evaluator()
{
    return [](std::size_t, const UnitCellBitmap& geo, const MaterialPair& m) { return fake_gap(geo, m); };
}

int run_cli(const std::string& args, const fs::path& log)
{
    const std::string cmd = "\"" + cli.string() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Config, ShippedConfigsRoundTrip)
{
    int n = 0;
    for (const auto& e : fs::directory_iterator(source_dir / "configs")) {
        if (e.path().extension() != ".json") continue;
        const ExperimentConfig c = load_config(e.path());
        const ExperimentConfig back = config_from_json(nlohmann::json::parse(to_json(c).dump()), c.base_dir);
        EXPECT_TRUE(same_settings(c, back)) << e.path();
        EXPECT_EQ(to_json(back), to_json(c));
        ++n;
    }
    EXPECT_GE(n, 9);
}

TEST(Config, RejectsUnknownKeysAndBadValues)
{
    auto j = to_json(ExperimentConfig{});
    j["resolutoin"] = 3;
    EXPECT_THROW(config_from_json(j), InvalidArgument);
    j = to_json(ExperimentConfig{});
    j["plan"] = {{"kind", "mc"}, {"n", 0}};
    EXPECT_THROW(config_from_json(j), InvalidArgument);
    j = to_json(ExperimentConfig{});
    j["inputs"] = nlohmann::json::parse(R"([{"name":"E_sfot","family":"uniform","params":{"lower":1,"upper":2}}])");
    EXPECT_THROW(config_from_json(j), InvalidArgument);
    EXPECT_THROW(load_config(source_dir / "configs" / "missing.json"), InvalidArgument);
}

TEST(Config, DefectStudiesStartFromTheDesign)
{
    const ExperimentConfig c = load_config(source_dir / "configs" / "resolution-convergence.json");
    ASSERT_EQ(c.geometry.resolution, 16);
    const auto setup = defect_setup(c, quiet_context(scratch("design")));
    EXPECT_EQ(setup.design, builtin_design("square"));
    EXPECT_EQ(load_geometry(c).resolution(), 16);
    // integer factors reproduce the scaled design exactly
    for (int res : {20, 30, 40}) EXPECT_EQ(resample_bitmap(setup.design, res), scale_bitmap(builtin_design("square"), res / 10));
}

TEST(Cache, HitsAreBitIdenticalToFreshSolves)
{
    const fs::path dir = scratch("cache");
    EvalCache cache(dir);
    std::mt19937_64 g(21);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (int t = 0; t < 20; ++t) {
        const int res = 4 + t % 9;
        std::vector<std::uint8_t> cells(static_cast<std::size_t>(res) * res);
        for (auto& c : cells) c = g() & 1;
        const UnitCellBitmap bmp(res, cells);
        const MaterialPair mats{ElasticMaterial::from_youngs_poisson(200e6 * u(g), 0.3, 1000 * u(g)),
                                ElasticMaterial::from_youngs_poisson(200e9 * u(g), 0.28, 8000 * u(g))};
        FemSettings fem;
        fem.k_per_segment = 2 + t % 3;
        fem.n_bands = 4 + t % 3;
        fem.lattice_constant = 0.05 * u(g);
        bool hit = true;
        const auto first = cached_dispersion(bmp, mats, fem, &cache, &hit);
        EXPECT_FALSE(hit);
        const auto second = cached_dispersion(bmp, mats, fem, &cache, &hit);
        EXPECT_TRUE(hit);
        const auto fresh = cached_dispersion(bmp, mats, fem, nullptr);
        ASSERT_EQ(second.frequencies.size(), fresh.frequencies.size());
        EXPECT_EQ(std::memcmp(second.frequencies.data(), fresh.frequencies.data(), fresh.frequencies.size() * sizeof(double)), 0);
        EXPECT_TRUE(first == second);
    }
    EXPECT_EQ(cache.hits(), 20u);
    fs::remove_all(dir);
}

TEST(Dataset, PlanRowCounts)
{
    ExperimentConfig c = gamma7_config();
    const auto ctx = quiet_context(scratch("counts"));
    c.plan = {SamplingPlan::Kind::sparse, 0, 1, 1};
    EXPECT_EQ(generate_dataset(c, c.plan, 1, ctx, fake_evaluator()).size(), 15u);
    c.plan = {SamplingPlan::Kind::quadrature, 0, 1, 1};
    EXPECT_EQ(generate_dataset(c, c.plan, 1, ctx, fake_evaluator()).size(), 128u);
    c.plan = {SamplingPlan::Kind::mc, 37, 1, 1};
    EXPECT_EQ(generate_dataset(c, c.plan, 1, ctx, fake_evaluator()).size(), 37u);

    const ExperimentConfig one = load_config(source_dir / "configs" / "study-1d-uniform.json");
    const auto spec = uq_study_spec(one);
    ASSERT_EQ(spec.datasets.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k)
        EXPECT_EQ(plan_points(one.inputs, spec.datasets[k].plan, 0).x.rows(), static_cast<Eigen::Index>(k + 3));
    EXPECT_EQ(spec.truth.n, 2000);

    const auto seven = uq_study_spec(load_config(source_dir / "configs" / "study-7d-gamma.json"));
    std::vector<Eigen::Index> sizes;
    for (const auto& d : seven.datasets) sizes.push_back(plan_points(c.inputs, d.plan, 0).x.rows());
    EXPECT_EQ(sizes, (std::vector<Eigen::Index>{100, 1000, 128, 15}));
}

TEST(Dataset, InjectedFailureLeavesSentinelRow)
{
    ExperimentConfig c = gamma7_config();
    c.plan = {SamplingPlan::Kind::mc, 12, 1, 1};
    const fs::path out = scratch("failure");
    const auto ctx = quiet_context(out);
    const Dataset d = generate_dataset(c, c.plan, 3, ctx, [](std::size_t i, const UnitCellBitmap& g, const MaterialPair& m) {
        if (i == 5) throw SolverError("Krylov iteration did not converge, injected");
        return fake_gap(g, m);
    });
    ASSERT_EQ(d.size(), 12u);
    EXPECT_EQ(d.failures(), 1u);
    EXPECT_FALSE(d.outcomes[5].ok());
    EXPECT_EQ(d.outcomes[5].status.rfind("error: ", 0), 0u);
    EXPECT_EQ(d.outcomes[5].status.find(','), std::string::npos);
    write_dataset(out, d);
    const auto back = read_dataset(out);
    EXPECT_EQ(back.failures(), 1u);
    EXPECT_EQ(back.column(0).size(), 11u);
    const auto s = fit_dataset(back, 1, "auto", 0);
    EXPECT_TRUE(s.coefficients.allFinite());
    fs::remove_all(out);
}

TEST(Dataset, FemRerunIsByteIdentical)
{
    ExperimentConfig c = gamma7_config();
    c.plan = {SamplingPlan::Kind::mc, 4, 1, 1};
    const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
    write_dataset(a, generate_dataset(c, c.plan, c.seed, quiet_context(a)));
    write_dataset(b, generate_dataset(c, c.plan, c.seed, quiet_context(b)));
    for (const char* f : {"inputs.csv", "outputs.csv", "dataset.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Dataset, FpSharesGeometryAcrossRows)
{
    ExperimentConfig c = gamma7_config();
    c.plan = {SamplingPlan::Kind::sparse, 0, 1, 1};
    const Dataset d = generate_dataset(c, c.plan, 1, quiet_context(scratch("fpkey")), fake_evaluator());
    const int fp_col = c.inputs.index_of("fp");
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t k = 0; k < d.size(); ++k)
            EXPECT_EQ(d.inputs(i, fp_col) == d.inputs(k, fp_col), d.row_seeds[i] == d.row_seeds[k]);
}

TEST(Fit, QuadratureDatasetRecoversPolynomialModel)
{
    ExperimentConfig c = gamma7_config();
    c.inputs = JointDistribution({c.inputs.components[0], c.inputs.components[2], c.inputs.components[4]}, {"K_soft", "G_soft", "rho_soft"});
    c.plan = {SamplingPlan::Kind::quadrature, 0, 2, 1};
    const auto pts = plan_points(c.inputs, c.plan, c.seed);
    // outputs are degree-2 polynomials of the input point
    auto model = [&](std::size_t i) {
        const Eigen::VectorXd x = pts.x.row(static_cast<Eigen::Index>(i)).transpose();
        const double k = x[0] / 278e6, gs = x[1] / 72.5e6, r = x[2] / 1000;
        return std::pair{1000 + 300 * k * gs - 50 * r * r, 3000 + 20 * k - 10 * gs * r};
    };
    const Dataset d = generate_dataset(c, c.plan, c.seed, quiet_context(scratch("recover")),
                                       [&](std::size_t i, const UnitCellBitmap&, const MaterialPair&) {
                                           const auto [size, center] = model(i);
                                           GapOutcome o;
                                           o.gap = BandGap{3, center - 0.5 * size, center + 0.5 * size};
                                           return o;
                                       });
    ASSERT_EQ(d.size(), 27u);
    const auto s = fit_dataset(d, 2, "auto", c.seed);
    EXPECT_EQ(s.method, FitMethod::quadrature);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto [size, center] = model(i);
        const Eigen::VectorXd y = evaluate(s, pts.x.row(static_cast<Eigen::Index>(i)).transpose());
        EXPECT_NEAR(y[0], size, 1e-8 * std::abs(size));
        EXPECT_NEAR(y[1], center, 1e-8 * std::abs(center));
    }
    const auto again = fit_dataset(d, 2, "auto", c.seed);
    EXPECT_EQ(again.coefficients, s.coefficients);
    EXPECT_EQ(again.training_hash, s.training_hash);
}

TEST(Fit, UnderdeterminedNamesRequiredCount)
{
    ExperimentConfig c = gamma7_config();
    c.plan = {SamplingPlan::Kind::mc, 10, 1, 1};
    const Dataset d = generate_dataset(c, c.plan, 1, quiet_context(scratch("under")), fake_evaluator());
    try {
        (void)fit_dataset(d, 2, "least_squares", 0);
        FAIL() << "expected an underdetermined error";
    } catch (const UnderdeterminedError& e) {
        EXPECT_NE(std::string(e.what()).find("36"), std::string::npos) << e.what();
    }
    EXPECT_THROW(fit_dataset(d, 1, "quadrature", 0), InvalidArgument);
}

TEST(Fit, RefitFromDiskIsIdentical)
{
    ExperimentConfig c = gamma7_config();
    c.plan = {SamplingPlan::Kind::mc, 40, 1, 1};
    c.pce_degree = 1;
    const fs::path dir = scratch("refit");
    const auto ctx = quiet_context(dir);
    const Dataset d = cmd_sample(c, ctx, fake_evaluator());
    const auto a = cmd_fit(c, dir, ctx);
    const std::string first = slurp(dir / "surrogate.json");
    const auto b = cmd_fit(c, dir, ctx);
    EXPECT_EQ(a.coefficients, b.coefficients);
    EXPECT_EQ(first, slurp(dir / "surrogate.json"));
    EXPECT_EQ(a.coefficients, fit_dataset(d, 1, "auto", c.seed).coefficients);
    fs::remove_all(dir);
}

TEST(Compare, IdentityHasZeroKsAndTwoSections)
{
    ExperimentConfig c = gamma7_config();
    c.plan = {SamplingPlan::Kind::mc, 50, 1, 1};
    const Dataset d = generate_dataset(c, c.plan, 1, quiet_context(scratch("identity")), fake_evaluator());
    const auto cmp = compare_outputs(d, detail::truth_matrix(d));
    ASSERT_EQ(cmp.size(), 2u);
    EXPECT_EQ(cmp[0].output, "gap_size_hz");
    EXPECT_EQ(cmp[1].output, "gap_center_hz");
    for (const auto& o : cmp) EXPECT_EQ(o.metrics.ks_statistic, 0.0);
}

TEST(Compare, RejectsMismatchedJoint)
{
    ExperimentConfig c = gamma7_config();
    c.plan = {SamplingPlan::Kind::mc, 40, 1, 1};
    const fs::path dir = scratch("mismatch");
    const auto ctx = quiet_context(dir);
    (void)cmd_sample(c, ctx, fake_evaluator());
    (void)cmd_fit(c, dir, ctx);
    const auto ok = cmd_compare(dir / "surrogate.json", dir, 200, 1, 10, ctx);
    EXPECT_EQ(ok.size(), 2u);
    EXPECT_TRUE(fs::exists(dir / "comparison.csv"));
    EXPECT_TRUE(fs::exists(dir / "gap_size_hz_pdf.svg"));
    EXPECT_TRUE(fs::exists(dir / "joint_histograms.svg"));

    ExperimentConfig other = c;
    other.inputs.components[0] = gamma_from_mean_cov(300e6, 0.08);
    const fs::path dir2 = scratch("mismatch_truth");
    (void)cmd_sample(other, quiet_context(dir2), fake_evaluator());
    EXPECT_THROW(cmd_compare(dir / "surrogate.json", dir2, 200, 1, 10, ctx), InvalidArgument);
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST(Study, UqStudyRerunIsByteIdentical)
{
    ExperimentConfig c = load_config(source_dir / "configs" / "study-1d-uniform.json");
    c.study["truth"]["n"] = 200;
    c.study["draws"] = 500;
    const fs::path a = scratch("study_a"), b = scratch("study_b");
    const auto ra = run_uq_study(c, quiet_context(a), fake_evaluator());
    (void)run_uq_study(c, quiet_context(b), fake_evaluator());
    int compared = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.path().extension() != ".csv") continue;
        EXPECT_EQ(slurp(e.path()), slurp(b / fs::relative(e.path(), a))) << e.path();
        ++compared;
    }
    EXPECT_GT(compared, 10);
    ASSERT_EQ(ra.reports.size(), 4u);
    for (const auto& r : ra.reports) EXPECT_EQ(r.status, "ok");
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(Process, ExitCodesAndCacheHitLog)
{
    const fs::path dir = scratch("process");
    const fs::path log = dir / "log.txt";
    EXPECT_NE(run_cli("", log), 0);
    EXPECT_NE(run_cli("dispersion", log), 0);
    EXPECT_NE(run_cli("dispersion -c " + (dir / "nope.json").string(), log), 0);

    std::ofstream(dir / "broken.json") << "{ not json";
    EXPECT_EQ(run_cli("dispersion -c " + (dir / "broken.json").string(), log), 2);
    EXPECT_NE(slurp(log).find("error"), std::string::npos);

    auto j = to_json(ExperimentConfig{});
    j["geometry"] = {{"design", "square"}, {"resolution", 10}};
    j["fem"] = {{"n_bands", 6}, {"k_per_segment", 3}};
    std::ofstream(dir / "tiny.json") << j.dump(2);
    const std::string args = "dispersion -c " + (dir / "tiny.json").string() + " -o " + (dir / "out").string() + " --cache-dir " +
                             (dir / "cache").string();
    EXPECT_EQ(run_cli(args, log), 0) << slurp(log);
    EXPECT_NE(slurp(log).find("computed"), std::string::npos);
    const std::string first = slurp(dir / "out" / "dispersion.csv");
    EXPECT_FALSE(first.empty());
    EXPECT_TRUE(fs::exists(dir / "out" / "dispersion.svg"));
    EXPECT_EQ(run_cli(args, log), 0);
    EXPECT_NE(slurp(log).find("cache hit"), std::string::npos) << slurp(log);
    EXPECT_EQ(slurp(dir / "out" / "dispersion.csv"), first);

    j["inputs"] = nlohmann::json::parse(R"([{"name":"E_soft","family":"uniform","params":{"lower":1.6e8,"upper":2.4e8}}])");
    j["plan"] = {{"kind", "mc"}, {"n", 10}};
    j["pce"] = {{"degree", 2}, {"method", "least_squares"}};
    std::ofstream(dir / "sample.json") << j.dump(2);
    const std::string cfg = " -c " + (dir / "sample.json").string();
    EXPECT_EQ(run_cli("sample" + cfg + " -o " + (dir / "ds").string() + " -q", log), 0) << slurp(log);
    EXPECT_EQ(run_cli("fit" + cfg + " -d " + (dir / "ds").string() + " -o " + (dir / "fit").string(), log), 0) << slurp(log);
    EXPECT_TRUE(fs::exists(dir / "fit" / "surrogate.json"));
    EXPECT_EQ(run_cli("compare" + cfg + " -s " + (dir / "fit" / "surrogate.json").string() + " -t " + (dir / "ds").string() +
                          " -n 100 -o " + (dir / "cmp").string(),
                      log),
              0)
        << slurp(log);
    EXPECT_TRUE(fs::exists(dir / "cmp" / "comparison.csv"));
    EXPECT_NE(run_cli("study no-such-study" + cfg, log), 0);
    fs::remove_all(dir);
}
