#pragma once

#include "phonon_uq/cache.hpp"
#include "phonon_uq/config.hpp"
#include "phonon_uq/model.hpp"
#include "phonon_uq/pce.hpp"
#include "phonon_uq/quadrature.hpp"

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace phonon_uq {

/// Simple leveled logger; studies write to stderr and optionally a log file.
class Logger {
public:
    explicit Logger(std::ostream* out = &std::cerr, bool verbose = true) : out_(out), verbose_(verbose) {}

    void info(const std::string& msg) const
    {
        if (verbose_ && out_) *out_ << "[info] " << msg << '\n';
    }
    void warn(const std::string& msg) const
    {
        if (out_) *out_ << "[warn] " << msg << '\n';
    }

private:
    std::ostream* out_;
    bool verbose_;
};

struct RunContext {
    std::filesystem::path out_dir = "out";
    int jobs = 1;
    EvalCache* cache = nullptr;
    Logger log;
};

struct PlanPoints {
    Eigen::MatrixXd x;
    std::optional<Eigen::VectorXd> weights;
};

/// Input points of a sampling plan: MC draws, tensor Gauss nodes or Smolyak nodes.
inline PlanPoints plan_points(const JointDistribution& joint, const SamplingPlan& plan, std::uint64_t seed)
{
    switch (plan.kind) {
    case SamplingPlan::Kind::mc: return {sample_joint(joint, static_cast<std::size_t>(plan.n), seed), std::nullopt};
    case SamplingPlan::Kind::quadrature: {
        const auto rule = tensor_grid(joint, plan.degree);
        return {rule.nodes, rule.weights};
    }
    case SamplingPlan::Kind::sparse: {
        const auto rule = smolyak_grid(joint, {plan.level, joint.dimension()});
        return {rule.nodes, rule.weights};
    }
    }
    throw InvalidArgument("unknown sampling plan");
}

/// Inputs, per-row defect seeds and gap outputs of one sampling plan.
struct Dataset {
    JointDistribution joint;
    SamplingPlan plan;
    std::uint64_t seed = 0;
    Eigen::MatrixXd inputs;
    std::optional<Eigen::VectorXd> weights;
    std::vector<std::uint64_t> row_seeds;
    std::vector<GapOutcome> outcomes;

    std::size_t size() const { return outcomes.size(); }
    std::size_t failures() const
    {
        std::size_t n = 0;
        for (const auto& o : outcomes) n += !o.ok();
        return n;
    }
    /// gap size and center of the rows that have a gap
    std::vector<double> column(int output) const
    {
        std::vector<double> v;
        for (const auto& o : outcomes)
            if (o.ok()) v.push_back(output == 0 ? o.size() : o.center());
        return v;
    }
};

inline const std::vector<std::string>& output_names()
{
    static const std::vector<std::string> names = {"gap_size_hz", "gap_center_hz"};
    return names;
}

/**
 * Defect seed of an input point, keyed on the master seed and the exact FP value.
 * Points that share an FP coordinate share one geometry, so the model stays a
 * function of its inputs across datasets drawn from the same config.
 */
inline std::uint64_t defect_seed(std::uint64_t master_seed, double fp)
{
    return derive_key(derive_key(master_seed, 0xdefec7ULL), std::bit_cast<std::uint64_t>(fp));
}

using RowEvaluator = std::function<GapOutcome(std::size_t row, const UnitCellBitmap& geometry, const MaterialPair& materials)>;

inline RowEvaluator fem_evaluator(const ExperimentConfig& config, EvalCache* cache)
{
    const FemSettings fem = config.fem();
    const GapPolicy policy = config.gap_policy;
    return [fem, policy, cache](std::size_t, const UnitCellBitmap& geo, const MaterialPair& mats) {
        return gap_outcome(cached_dispersion(geo, mats, fem, cache), policy);
    };
}

namespace detail {

inline std::string sanitize_reason(std::string s)
{
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

} // namespace detail

/**
 * Draws the plan's points, pairs each with one seeded defect geometry at its FP
 * coordinate and evaluates the model. Row failures become sentinel rows with
 * the reason in their status; the run continues.
 */
inline Dataset generate_dataset(const ExperimentConfig& config, const SamplingPlan& plan, std::uint64_t seed, const RunContext& ctx,
                                RowEvaluator evaluate = {})
{
    if (!config.has_inputs()) throw InvalidArgument("config has no stochastic inputs; dataset generation needs 'inputs'");
    if (!evaluate) evaluate = fem_evaluator(config, ctx.cache);
    const UnitCellBitmap base = load_geometry(config);
    Dataset d;
    d.joint = config.inputs;
    d.plan = plan;
    d.seed = seed;
    auto pts = plan_points(config.inputs, plan, seed);
    d.inputs = std::move(pts.x);
    d.weights = std::move(pts.weights);
    const auto n = static_cast<std::size_t>(d.inputs.rows());
    d.row_seeds.resize(n);
    d.outcomes.resize(n);
    std::vector<char> clamped(n, 0);
    parallel_for(n, ctx.jobs, [&](std::size_t i) {
        try {
            const ModelPoint mp = model_point(config, d.inputs.row(static_cast<Eigen::Index>(i)).transpose());
            clamped[i] = mp.fp_clamped;
            d.row_seeds[i] = defect_seed(config.seed, mp.fp);
            const UnitCellBitmap geo = mp.fp > 0 ? apply_defects(base, {mp.fp, d.row_seeds[i]}) : base;
            d.outcomes[i] = evaluate(i, geo, mp.materials);
        } catch (const std::exception& e) {
            d.outcomes[i].gap.reset();
            d.outcomes[i].status = "error: " + detail::sanitize_reason(e.what());
        }
    });
    std::size_t n_clamped = 0;
    for (char c : clamped) n_clamped += c;
    if (n_clamped) ctx.log.warn(std::to_string(n_clamped) + " FP coordinates fell outside [0, 1] and were clamped");
    if (d.failures())
        ctx.log.warn(std::to_string(d.failures()) + " of " + std::to_string(n) + " rows have no gap or failed (sentinel rows kept)");
    return d;
}

namespace detail {

inline std::string fmt17(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// inputs.csv: sample_index, seed, <labels>[, weight]
inline void write_inputs_csv(std::ostream& os, const Dataset& d)
{
    os << "sample_index,seed";
    for (const auto& l : d.joint.labels) os << ',' << l;
    if (d.weights) os << ",weight";
    os << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        os << i << ',' << d.row_seeds[i];
        for (Eigen::Index j = 0; j < d.inputs.cols(); ++j) os << ',' << detail::fmt17(d.inputs(static_cast<Eigen::Index>(i), j));
        if (d.weights) os << ',' << detail::fmt17((*d.weights)[static_cast<Eigen::Index>(i)]);
        os << '\n';
    }
}

/// outputs.csv: sample_index, gap_size_hz, gap_bottom_hz, gap_top_hz, gap_center_hz, below_band, status
inline void write_outputs_csv(std::ostream& os, const Dataset& d)
{
    os << "sample_index,gap_size_hz,gap_bottom_hz,gap_top_hz,gap_center_hz,below_band,status\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& o = d.outcomes[i];
        os << i << ',' << detail::fmt17(o.size()) << ',' << detail::fmt17(o.bottom()) << ',' << detail::fmt17(o.top()) << ','
           << detail::fmt17(o.center()) << ',' << o.below_band() << ',' << o.status << '\n';
    }
}

inline nlohmann::json dataset_meta(const Dataset& d)
{
    return {{"joint", to_json(d.joint)}, {"plan", to_json(d.plan)}, {"seed", d.seed}, {"rows", d.size()}, {"failures", d.failures()}};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline void write_dataset(const std::filesystem::path& dir, const Dataset& d)
{
    std::ostringstream in, out;
    write_inputs_csv(in, d);
    write_outputs_csv(out, d);
    write_text_file(dir / "inputs.csv", in.str());
    write_text_file(dir / "outputs.csv", out.str());
    write_text_file(dir / "dataset.json", dataset_meta(d).dump(2) + "\n");
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    auto split = [](const std::string& line) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        if (!line.empty() && line.back() == ',') out.emplace_back();
        return out;
    };
    CsvTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (t.header.empty()) {
            t.header = split(line);
            continue;
        }
        auto row = split(line);
        if (row.size() != t.header.size())
            throw ParseError(path.string() + ": expected " + std::to_string(t.header.size()) + " fields, got " + std::to_string(row.size()), line_no);
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw ParseError(path.string() + ": empty CSV", line_no);
    return t;
}

inline double parse_double(const std::string& s)
{
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw InvalidArgument("not a number: '" + s + "'");
    return v;
}

/// Reads a dataset directory written by write_dataset.
inline Dataset read_dataset(const std::filesystem::path& dir)
{
    Dataset d;
    nlohmann::json meta;
    {
        std::ifstream in(dir / "dataset.json");
        if (!in) throw InvalidArgument("dataset directory " + dir.string() + " has no dataset.json");
        try {
            in >> meta;
            d.joint = joint_from_json(meta.at("joint"));
            d.plan = plan_from_json(meta.at("plan"));
            d.seed = meta.at("seed").get<std::uint64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw InvalidArgument("malformed dataset.json in " + dir.string() + ": " + e.what());
        }
    }
    const CsvTable inputs = read_csv(dir / "inputs.csv");
    const CsvTable outputs = read_csv(dir / "outputs.csv");
    if (inputs.rows.size() != outputs.rows.size()) throw InvalidArgument("inputs.csv and outputs.csv have different row counts");
    const int m = d.joint.dimension();
    const int w_col = inputs.column("weight");
    std::vector<int> cols;
    for (const auto& l : d.joint.labels) {
        cols.push_back(inputs.column(l));
        if (cols.back() < 0) throw InvalidArgument("inputs.csv lacks column '" + l + "'");
    }
    const std::size_t n = inputs.rows.size();
    d.inputs.resize(static_cast<Eigen::Index>(n), m);
    if (w_col >= 0) d.weights = Eigen::VectorXd(static_cast<Eigen::Index>(n));
    d.row_seeds.resize(n);
    d.outcomes.resize(n);
    const int seed_col = inputs.column("seed");
    const int size_col = outputs.column("gap_size_hz"), bottom_col = outputs.column("gap_bottom_hz"),
              top_col = outputs.column("gap_top_hz"), band_col = outputs.column("below_band"), status_col = outputs.column("status");
    if (size_col < 0 || bottom_col < 0 || top_col < 0 || band_col < 0 || status_col < 0 || seed_col < 0)
        throw InvalidArgument("dataset CSVs lack required columns");
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) d.inputs(static_cast<Eigen::Index>(i), j) = parse_double(inputs.rows[i][cols[j]]);
        if (w_col >= 0) (*d.weights)[static_cast<Eigen::Index>(i)] = parse_double(inputs.rows[i][w_col]);
        d.row_seeds[i] = std::stoull(inputs.rows[i][seed_col]);
        auto& o = d.outcomes[i];
        o.status = outputs.rows[i][status_col];
        if (o.status == "ok") {
            BandGap g;
            g.below_band = std::stoi(outputs.rows[i][band_col]);
            g.bottom = parse_double(outputs.rows[i][bottom_col]);
            g.top = parse_double(outputs.rows[i][top_col]);
            o.gap = g;
        }
    }
    return d;
}

/// Training hash: SHA-256 over the serialized inputs and outputs.
inline std::string training_hash(const Dataset& d)
{
    std::ostringstream os;
    write_inputs_csv(os, d);
    write_outputs_csv(os, d);
    return sha256_hex(os.str());
}

/**
 * PCE of (gap size, gap center) from a dataset. "auto" picks spectral
 * projection for weighted (quadrature/sparse) datasets and least squares for
 * Monte Carlo ones. MC fits drop sentinel rows; projection needs every node.
 */
inline PCESurrogate fit_dataset(const Dataset& d, int degree, const std::string& method_name, std::uint64_t seed, const Logger& log = Logger(nullptr))
{
    const FitMethod method = method_name == "auto" ? (d.weights ? FitMethod::quadrature : FitMethod::least_squares)
                                                   : fit_method_from_string(method_name);
    if (method == FitMethod::quadrature && !d.weights) throw InvalidArgument("quadrature fit needs a weighted (quadrature or sparse) dataset");
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.outcomes[i].ok()) keep.push_back(static_cast<Eigen::Index>(i));
    if (method == FitMethod::quadrature && keep.size() != d.size())
        throw InvalidArgument("spectral projection needs an output at every node; " + std::to_string(d.size() - keep.size()) +
                              " rows have no gap or failed");
    if (keep.size() != d.size()) log.warn("fit excludes " + std::to_string(d.size() - keep.size()) + " sentinel rows");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(keep.size()), d.inputs.cols());
    Eigen::MatrixXd y(static_cast<Eigen::Index>(keep.size()), 2);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const auto i = keep[r];
        x.row(static_cast<Eigen::Index>(r)) = d.inputs.row(i);
        y(static_cast<Eigen::Index>(r), 0) = d.outcomes[static_cast<std::size_t>(i)].size();
        y(static_cast<Eigen::Index>(r), 1) = d.outcomes[static_cast<std::size_t>(i)].center();
    }
    PCESurrogate s = [&] {
        switch (method) {
        case FitMethod::quadrature: return fit_quadrature({x, *d.weights}, y, d.joint, degree);
        case FitMethod::mc_projection: return fit_mc_projection({x, y, std::nullopt}, d.joint, degree);
        case FitMethod::least_squares: break;
        }
        return fit_least_squares({x, y, std::nullopt}, d.joint, degree);
    }();
    s.output_names = output_names();
    s.training_hash = training_hash(d);
    s.seed = seed;
    log.info("fitted " + to_string(method) + " PCE of degree " + std::to_string(degree) + " on " + std::to_string(keep.size()) + " rows");
    return s;
}

} // namespace phonon_uq
