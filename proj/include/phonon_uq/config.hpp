#pragma once

#include "phonon_uq/bandgap.hpp"
#include "phonon_uq/designs.hpp"
#include "phonon_uq/distributions.hpp"
#include "phonon_uq/eigensolver.hpp"
#include "phonon_uq/errors.hpp"
#include "phonon_uq/geometry.hpp"
#include "phonon_uq/material.hpp"
#include "phonon_uq/model.hpp"
#include "phonon_uq/pce.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace phonon_uq {

inline constexpr int config_schema_version = 1;

/// Input labels that map onto model parameters.
inline const std::vector<std::string>& known_input_labels()
{
    static const std::vector<std::string> labels = {"E_soft", "E_hard", "nu_soft", "nu_hard", "K_soft", "K_hard",
                                                    "G_soft", "G_hard", "rho_soft", "rho_hard", "fp"};
    return labels;
}

struct GeometrySource {
    std::string design;          // built-in name, used when file is empty
    std::string file;            // text or PGM bitmap, relative to the config file
    int scale = 1;               // integer upscaling of the source bitmap
    int resolution = 0;          // final resolution after scaling; 0 keeps it

    friend bool operator==(const GeometrySource&, const GeometrySource&) = default;
};

struct NominalMaterial {
    double youngs = 0;
    double poisson = 0;
    double density = 0;

    friend bool operator==(const NominalMaterial&, const NominalMaterial&) = default;
};

struct SamplingPlan {
    enum class Kind { mc, quadrature, sparse };
    Kind kind = Kind::mc;
    int n = 100;    // mc
    int degree = 1; // quadrature: degree + 1 points per dimension
    int level = 1;  // sparse

    friend bool operator==(const SamplingPlan&, const SamplingPlan&) = default;
};

struct ExperimentConfig {
    int schema_version = config_schema_version;
    std::string name = "experiment";
    std::string description;
    GeometrySource geometry{"square", "", 1, 0};
    double lattice_constant = 0.1;
    NominalMaterial soft{200e6, 0.38, 1000.0};
    NominalMaterial hard{200e9, 0.28, 8000.0};
    JointDistribution inputs;     // may be empty for deterministic commands
    double fp = 0.0;              // flip proportion when "fp" is not an input
    int n_bands = 10;
    int k_per_segment = 16;
    SolverSettings solver;
    GapPolicy gap_policy = GapPolicy::largest();
    SamplingPlan plan;
    int pce_degree = 1;
    std::string fit_method = "auto"; // auto | least_squares | mc_projection | quadrature
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    nlohmann::json study = nlohmann::json::object();
    std::filesystem::path base_dir; // directory of the config file; not serialized

    FemSettings fem() const { return {lattice_constant, n_bands, k_per_segment, solver}; }

    MaterialPair nominal_materials() const
    {
        return {ElasticMaterial::from_youngs_poisson(soft.youngs, soft.poisson, soft.density),
                ElasticMaterial::from_youngs_poisson(hard.youngs, hard.poisson, hard.density)};
    }

    bool has_inputs() const { return !inputs.components.empty(); }
};

inline bool same_settings(const ExperimentConfig& a, const ExperimentConfig& b)
{
    const auto& sa = a.solver;
    const auto& sb = b.solver;
    return a.schema_version == b.schema_version && a.name == b.name && a.description == b.description && a.geometry == b.geometry &&
           a.lattice_constant == b.lattice_constant && a.soft == b.soft && a.hard == b.hard && a.inputs == b.inputs &&
           a.fp == b.fp && a.n_bands == b.n_bands && a.k_per_segment == b.k_per_segment && sa.kind == sb.kind &&
           sa.dense_max_dofs == sb.dense_max_dofs && sa.tolerance == sb.tolerance && sa.block_size == sb.block_size &&
           sa.max_subspace == sb.max_subspace && a.gap_policy.mode == b.gap_policy.mode &&
           a.gap_policy.band == b.gap_policy.band && a.gap_policy.max_band == b.gap_policy.max_band && a.plan == b.plan &&
           a.pce_degree == b.pce_degree && a.fit_method == b.fit_method && a.seed == b.seed &&
           a.output_dir == b.output_dir && a.study == b.study;
}

inline std::string to_string(SolverKind k)
{
    switch (k) {
    case SolverKind::automatic: return "automatic";
    case SolverKind::dense: return "dense";
    case SolverKind::iterative: return "iterative";
    }
    return "automatic";
}

inline std::string to_string(SamplingPlan::Kind k)
{
    switch (k) {
    case SamplingPlan::Kind::mc: return "mc";
    case SamplingPlan::Kind::quadrature: return "quadrature";
    case SamplingPlan::Kind::sparse: return "sparse";
    }
    return "mc";
}

inline nlohmann::json to_json(const SamplingPlan& p)
{
    switch (p.kind) {
    case SamplingPlan::Kind::mc: return {{"kind", "mc"}, {"n", p.n}};
    case SamplingPlan::Kind::quadrature: return {{"kind", "quadrature"}, {"degree", p.degree}};
    case SamplingPlan::Kind::sparse: return {{"kind", "sparse"}, {"level", p.level}};
    }
    return {};
}

inline nlohmann::json to_json(const ExperimentConfig& c)
{
    nlohmann::json geo = {{"scale", c.geometry.scale}, {"resolution", c.geometry.resolution}};
    if (!c.geometry.file.empty()) geo["file"] = c.geometry.file;
    else geo["design"] = c.geometry.design;
    auto mat = [](const NominalMaterial& m) {
        return nlohmann::json{{"youngs", m.youngs}, {"poisson", m.poisson}, {"density", m.density}};
    };
    return {{"schema_version", c.schema_version},
            {"name", c.name},
            {"description", c.description},
            {"geometry", geo},
            {"lattice_constant", c.lattice_constant},
            {"materials", {{"soft", mat(c.soft)}, {"hard", mat(c.hard)}}},
            {"inputs", c.has_inputs() ? to_json(c.inputs) : nlohmann::json::array()},
            {"fp", c.fp},
            {"fem",
             {{"n_bands", c.n_bands},
              {"k_per_segment", c.k_per_segment},
              {"solver", to_string(c.solver.kind)},
              {"dense_max_dofs", c.solver.dense_max_dofs},
              {"tolerance", c.solver.tolerance},
              {"block_size", c.solver.block_size},
              {"max_subspace", c.solver.max_subspace}}},
            {"gap_policy", {{"mode", to_string(c.gap_policy.mode)}, {"band", c.gap_policy.band}, {"max_band", c.gap_policy.max_band}}},
            {"plan", to_json(c.plan)},
            {"pce", {{"degree", c.pce_degree}, {"method", c.fit_method}}},
            {"seed", c.seed},
            {"output_dir", c.output_dir},
            {"study", c.study}};
}

namespace detail {

template <class T>
T get_or(const nlohmann::json& obj, const char* key, T fallback, const std::string& where)
{
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidArgument("config: '" + where + "." + key + "' has the wrong type");
    }
}

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where)
{
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw InvalidArgument("config: unknown key '" + where + "." + it.key() + "'");
}

} // namespace detail

inline SamplingPlan plan_from_json(const nlohmann::json& j)
{
    SamplingPlan p;
    const std::string kind = detail::get_or<std::string>(j, "kind", "mc", "plan");
    if (kind == "mc") {
        p.kind = SamplingPlan::Kind::mc;
        p.n = detail::get_or(j, "n", 100, "plan");
        if (p.n < 1) throw InvalidArgument("config: plan.n must be positive");
    } else if (kind == "quadrature") {
        p.kind = SamplingPlan::Kind::quadrature;
        p.degree = detail::get_or(j, "degree", 1, "plan");
        if (p.degree < 0) throw InvalidArgument("config: plan.degree must be nonnegative");
    } else if (kind == "sparse") {
        p.kind = SamplingPlan::Kind::sparse;
        p.level = detail::get_or(j, "level", 1, "plan");
        if (p.level < 0) throw InvalidArgument("config: plan.level must be nonnegative");
    } else {
        throw InvalidArgument("config: plan.kind must be mc, quadrature or sparse (got '" + kind + "')");
    }
    return p;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {})
{
    using detail::get_or;
    if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
    detail::reject_unknown(j, {"schema_version", "name", "geometry", "lattice_constant", "materials", "inputs", "fp", "fem",
                               "gap_policy", "plan", "pce", "seed", "output_dir", "study", "description"},
                           "config");
    ExperimentConfig c;
    c.base_dir = base_dir;
    c.schema_version = get_or(j, "schema_version", 0, "config");
    if (c.schema_version != config_schema_version)
        throw InvalidArgument("config: schema_version must be " + std::to_string(config_schema_version));
    c.name = get_or<std::string>(j, "name", c.name, "config");
    c.description = get_or<std::string>(j, "description", "", "config");
    if (j.contains("geometry")) {
        const auto& g = j["geometry"];
        detail::reject_unknown(g, {"design", "file", "scale", "resolution"}, "geometry");
        c.geometry.file = get_or<std::string>(g, "file", "", "geometry");
        c.geometry.design = get_or<std::string>(g, "design", c.geometry.file.empty() ? "square" : "", "geometry");
        c.geometry.scale = get_or(g, "scale", 1, "geometry");
        c.geometry.resolution = get_or(g, "resolution", 0, "geometry");
        if (c.geometry.scale < 1) throw InvalidArgument("config: geometry.scale must be a positive integer");
        if (c.geometry.resolution < 0 || c.geometry.resolution == 1) throw InvalidArgument("config: geometry.resolution must be 0 or >= 2");
    }
    c.lattice_constant = get_or(j, "lattice_constant", c.lattice_constant, "config");
    if (!(c.lattice_constant > 0)) throw InvalidArgument("config: lattice_constant must be positive");
    if (j.contains("materials")) {
        auto read = [&](const char* phase, NominalMaterial& m) {
            if (!j["materials"].contains(phase)) return;
            const auto& o = j["materials"][phase];
            detail::reject_unknown(o, {"youngs", "poisson", "density"}, std::string("materials.") + phase);
            m.youngs = get_or(o, "youngs", m.youngs, std::string("materials.") + phase);
            m.poisson = get_or(o, "poisson", m.poisson, std::string("materials.") + phase);
            m.density = get_or(o, "density", m.density, std::string("materials.") + phase);
        };
        read("soft", c.soft);
        read("hard", c.hard);
        (void)c.nominal_materials(); // validates
    }
    if (j.contains("inputs") && !j["inputs"].empty()) {
        c.inputs = joint_from_json(j["inputs"]);
        std::set<std::string> seen;
        bool e_soft = false, k_soft = false, e_hard = false, k_hard = false;
        for (const auto& l : c.inputs.labels) {
            const auto& known = known_input_labels();
            if (std::find(known.begin(), known.end(), l) == known.end())
                throw InvalidArgument("config: unknown input '" + l + "' (expected one of E_soft, E_hard, nu_soft, nu_hard, "
                                      "K_soft, K_hard, G_soft, G_hard, rho_soft, rho_hard, fp)");
            if (!seen.insert(l).second) throw InvalidArgument("config: input '" + l + "' listed twice");
            e_soft |= l == "E_soft" || l == "nu_soft";
            e_hard |= l == "E_hard" || l == "nu_hard";
            k_soft |= l == "K_soft" || l == "G_soft";
            k_hard |= l == "K_hard" || l == "G_hard";
        }
        if ((e_soft && k_soft) || (e_hard && k_hard))
            throw InvalidArgument("config: a phase cannot mix (E, nu) and (K, G) inputs");
    }
    c.fp = get_or(j, "fp", 0.0, "config");
    if (!(c.fp >= 0 && c.fp <= 1)) throw InvalidArgument("config: fp must lie in [0, 1]");
    if (j.contains("fem")) {
        const auto& f = j["fem"];
        detail::reject_unknown(f, {"n_bands", "k_per_segment", "solver", "dense_max_dofs", "tolerance", "block_size", "max_subspace"}, "fem");
        c.n_bands = get_or(f, "n_bands", c.n_bands, "fem");
        c.k_per_segment = get_or(f, "k_per_segment", c.k_per_segment, "fem");
        const std::string kind = get_or<std::string>(f, "solver", "automatic", "fem");
        if (kind == "automatic") c.solver.kind = SolverKind::automatic;
        else if (kind == "dense") c.solver.kind = SolverKind::dense;
        else if (kind == "iterative") c.solver.kind = SolverKind::iterative;
        else throw InvalidArgument("config: fem.solver must be automatic, dense or iterative");
        c.solver.dense_max_dofs = get_or(f, "dense_max_dofs", c.solver.dense_max_dofs, "fem");
        c.solver.tolerance = get_or(f, "tolerance", c.solver.tolerance, "fem");
        c.solver.block_size = get_or(f, "block_size", c.solver.block_size, "fem");
        c.solver.max_subspace = get_or(f, "max_subspace", c.solver.max_subspace, "fem");
        if (c.n_bands < 2) throw InvalidArgument("config: fem.n_bands must be at least 2");
        if (c.k_per_segment < 2) throw InvalidArgument("config: fem.k_per_segment must be at least 2");
        if (!(c.solver.tolerance > 0)) throw InvalidArgument("config: fem.tolerance must be positive");
    }
    if (j.contains("gap_policy")) {
        const auto& g = j["gap_policy"];
        detail::reject_unknown(g, {"mode", "band", "max_band"}, "gap_policy");
        c.gap_policy.mode = gap_mode_from_string(get_or<std::string>(g, "mode", "largest", "gap_policy"));
        c.gap_policy.band = get_or(g, "band", 0, "gap_policy");
        c.gap_policy.max_band = get_or(g, "max_band", c.gap_policy.max_band, "gap_policy");
        if (c.gap_policy.mode == GapPolicy::Mode::between_bands && (c.gap_policy.band < 1 || c.gap_policy.band >= c.n_bands))
            throw InvalidArgument("config: gap_policy.band must lie in [1, n_bands - 1]");
    }
    if (j.contains("plan")) c.plan = plan_from_json(j["plan"]);
    if (j.contains("pce")) {
        const auto& p = j["pce"];
        detail::reject_unknown(p, {"degree", "method"}, "pce");
        c.pce_degree = get_or(p, "degree", c.pce_degree, "pce");
        c.fit_method = get_or<std::string>(p, "method", c.fit_method, "pce");
        if (c.pce_degree < 0) throw InvalidArgument("config: pce.degree must be nonnegative");
        if (c.fit_method != "auto") (void)fit_method_from_string(c.fit_method);
    }
    c.seed = get_or<std::uint64_t>(j, "seed", 0, "config");
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir, "config");
    if (j.contains("study")) {
        if (!j["study"].is_object()) throw InvalidArgument("config: study must be an object");
        c.study = j["study"];
    }
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

/// Design bitmap after scaling and resampling, before defects.
/// The design at its own resolution (after integer scaling), before resampling.
inline UnitCellBitmap load_design(const ExperimentConfig& c)
{
    UnitCellBitmap b = [&] {
        if (c.geometry.file.empty()) return builtin_design(c.geometry.design);
        std::filesystem::path p(c.geometry.file);
        if (p.is_relative() && !c.base_dir.empty()) p = c.base_dir / p;
        if (!std::filesystem::exists(p)) throw InvalidArgument("geometry file not found: " + p.string());
        return read_bitmap(p);
    }();
    if (c.geometry.scale > 1) b = scale_bitmap(b, c.geometry.scale);
    return b;
}

inline UnitCellBitmap load_geometry(const ExperimentConfig& c)
{
    UnitCellBitmap b = load_design(c);
    if (c.geometry.resolution > 0 && c.geometry.resolution != b.resolution()) b = resample_bitmap(b, c.geometry.resolution);
    return b;
}

/// Model parameters for one input point.
struct ModelPoint {
    MaterialPair materials;
    double fp = 0.0;
    bool fp_clamped = false;
};

/**
 * Materials and FP for an input row. A phase with K or G among the inputs is
 * built from (K, G, rho); otherwise from (E, nu, rho). Unsampled quantities keep
 * their nominal values.
 */
inline ModelPoint model_point(const ExperimentConfig& c, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    const auto& labels = c.inputs.labels;
    auto value = [&](const std::string& label, double nominal) {
        for (std::size_t j = 0; j < labels.size(); ++j)
            if (labels[j] == label) return x[static_cast<Eigen::Index>(j)];
        return nominal;
    };
    auto has = [&](const std::string& label) { return std::find(labels.begin(), labels.end(), label) != labels.end(); };
    auto build = [&](const NominalMaterial& nom, const std::string& phase) {
        const double rho = value("rho_" + phase, nom.density);
        if (has("K_" + phase) || has("G_" + phase)) {
            const auto base = ElasticMaterial::from_youngs_poisson(nom.youngs, nom.poisson, nom.density);
            return ElasticMaterial::from_bulk_shear(value("K_" + phase, base.bulk), value("G_" + phase, base.shear), rho);
        }
        return ElasticMaterial::from_youngs_poisson(value("E_" + phase, nom.youngs), value("nu_" + phase, nom.poisson), rho);
    };
    ModelPoint p{{build(c.soft, "soft"), build(c.hard, "hard")}, value("fp", c.fp), false};
    if (p.fp < 0.0 || p.fp > 1.0) {
        p.fp = std::min(1.0, std::max(0.0, p.fp));
        p.fp_clamped = true;
    }
    return p;
}

} // namespace phonon_uq
