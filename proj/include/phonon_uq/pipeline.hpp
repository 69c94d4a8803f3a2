#pragma once

#include "phonon_uq/analysis.hpp"
#include "phonon_uq/dataset.hpp"
#include "phonon_uq/svg.hpp"

#include <map>

namespace phonon_uq {

namespace detail {

inline void write_csv_and_svg(const std::filesystem::path& dir, const std::string& stem, const std::string& csv, const std::string& svg)
{
    write_text_file(dir / (stem + ".csv"), csv);
    write_text_file(dir / (stem + ".svg"), svg);
}

inline std::vector<double> json_doubles(const nlohmann::json& study, const char* key, std::vector<double> fallback)
{
    if (!study.contains(key)) return fallback;
    try {
        return study.at(key).get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidArgument(std::string("study.") + key + " must be a list of numbers");
    }
}

inline std::vector<int> json_ints(const nlohmann::json& study, const char* key, std::vector<int> fallback)
{
    if (!study.contains(key)) return fallback;
    try {
        return study.at(key).get<std::vector<int>>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidArgument(std::string("study.") + key + " must be a list of integers");
    }
}

template <class T>
T study_value(const nlohmann::json& study, const char* key, T fallback)
{
    return get_or<T>(study, key, fallback, "study");
}

} // namespace detail

/// Resolved config next to the outputs so a report directory documents its own settings.
inline void write_run_config(const std::filesystem::path& dir, const ExperimentConfig& c, const nlohmann::json& extra = {})
{
    nlohmann::json j = to_json(c);
    if (!extra.is_null()) j["report"] = extra;
    write_text_file(dir / "config.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// dispersion

struct DispersionReport {
    DispersionResult dispersion;
    std::vector<BandGap> gaps;
    bool cache_hit = false;
};

inline std::string dispersion_svg(const DispersionResult& d, const std::vector<BandGap>& gaps, const std::string& title)
{
    std::vector<svg::Series> bands(static_cast<std::size_t>(d.n_bands));
    for (int b = 0; b < d.n_bands; ++b) {
        for (std::size_t k = 0; k < d.n_kpoints(); ++k) {
            bands[b].x.push_back(d.kpath[k].arclength);
            bands[b].y.push_back(d.at(k, b));
        }
    }
    std::vector<std::pair<double, double>> shaded;
    for (const auto& g : gaps) shaded.emplace_back(g.bottom, g.top);
    return svg::line_chart(bands, title, "wavevector path (G-X-M-G)", "frequency (Hz)", shaded);
}

inline void write_gaps_csv(std::ostream& os, const std::vector<BandGap>& gaps)
{
    os << "below_band,gap_bottom_hz,gap_top_hz,gap_size_hz,gap_center_hz\n";
    for (const auto& g : gaps)
        os << g.below_band << ',' << detail::fmt17(g.bottom) << ',' << detail::fmt17(g.top) << ',' << detail::fmt17(g.size()) << ','
           << detail::fmt17(g.center()) << '\n';
}

/// Band diagram of the configured geometry (with defects when fp > 0) at nominal materials.
inline DispersionReport cmd_dispersion(const ExperimentConfig& c, const RunContext& ctx)
{
    UnitCellBitmap geo = load_geometry(c);
    if (c.fp > 0) geo = apply_defects(geo, {c.fp, c.seed});
    DispersionReport r;
    r.dispersion = cached_dispersion(geo, c.nominal_materials(), c.fem(), ctx.cache, &r.cache_hit);
    ctx.log.info(r.cache_hit ? "dispersion: cache hit, FEA skipped" : "dispersion: computed");
    r.gaps = extract_gaps(r.dispersion);
    std::ostringstream bands, gaps;
    write_dispersion_csv(bands, r.dispersion);
    write_gaps_csv(gaps, r.gaps);
    detail::write_csv_and_svg(ctx.out_dir, "dispersion", bands.str(), dispersion_svg(r.dispersion, r.gaps, c.name));
    write_text_file(ctx.out_dir / "gaps.csv", gaps.str());
    write_text_file(ctx.out_dir / "geometry.pgm", to_pgm(geo));
    write_run_config(ctx.out_dir, c);
    ctx.log.info(std::to_string(r.gaps.size()) + " gap(s) found");
    return r;
}

// ---------------------------------------------------------------------------
// defects

struct DefectRealization {
    std::uint64_t seed = 0;
    std::vector<Pixel> flips;
    UnitCellBitmap bitmap;
};

/// Seeded defect realizations of the configured geometry at config.fp.
inline std::vector<DefectRealization> cmd_defects(const ExperimentConfig& c, const RunContext& ctx)
{
    const UnitCellBitmap base = load_geometry(c);
    const int n = detail::study_value(c.study, "realizations", 4);
    if (n < 1) throw InvalidArgument("study.realizations must be positive");
    const std::size_t edges = find_edge_pixels(base).size();
    std::vector<DefectRealization> out;
    std::ostringstream summary, flips;
    summary << "realization,seed,fp,edge_pixels,flipped\n";
    flips << "realization,row,col,from,to\n";
    std::vector<UnitCellBitmap> strip{base};
    std::vector<std::string> titles{"design"};
    for (int r = 0; r < n; ++r) {
        const std::uint64_t seed = realization_seed(c.seed, base.resolution(), c.fp, r);
        const DefectSpec spec{c.fp, seed};
        DefectRealization d{seed, select_defect_pixels(base, spec), apply_defects(base, spec)};
        summary << r << ',' << seed << ',' << detail::fmt17(c.fp) << ',' << edges << ',' << d.flips.size() << '\n';
        for (const auto& p : d.flips)
            flips << r << ',' << p.row << ',' << p.col << ',' << int(base.at(p.row, p.col)) << ',' << int(d.bitmap.at(p.row, p.col)) << '\n';
        write_text_file(ctx.out_dir / "realizations" / ("realization_" + std::to_string(r) + ".pgm"), to_pgm(d.bitmap));
        strip.push_back(d.bitmap);
        titles.push_back("seed " + std::to_string(r));
        out.push_back(std::move(d));
    }
    detail::write_csv_and_svg(ctx.out_dir, "defects", summary.str(), svg::bitmap_strip(strip, titles));
    write_text_file(ctx.out_dir / "flips.csv", flips.str());
    write_run_config(ctx.out_dir, c);
    return out;
}

// ---------------------------------------------------------------------------
// sample / fit / compare

inline Dataset cmd_sample(const ExperimentConfig& c, const RunContext& ctx, RowEvaluator evaluate = {})
{
    ctx.log.info("sampling plan " + to_json(c.plan).dump());
    Dataset d = generate_dataset(c, c.plan, c.seed, ctx, std::move(evaluate));
    write_dataset(ctx.out_dir, d);
    write_run_config(ctx.out_dir, c);
    ctx.log.info("wrote " + std::to_string(d.size()) + " rows");
    return d;
}

inline PCESurrogate cmd_fit(const ExperimentConfig& c, const std::filesystem::path& dataset_dir, const RunContext& ctx)
{
    const Dataset d = read_dataset(dataset_dir);
    PCESurrogate s = fit_dataset(d, c.pce_degree, c.fit_method, c.seed, ctx.log);
    write_text_file(ctx.out_dir / "surrogate.json", to_json(s).dump(2) + "\n");
    return s;
}

struct OutputComparison {
    std::string output;
    DistributionComparison metrics;
    double truth_mean = 0, truth_std = 0, surrogate_mean = 0, surrogate_std = 0;
};

/// KS and moment errors of surrogate draws against the ground-truth gap outputs.
inline std::vector<OutputComparison> compare_outputs(const Dataset& truth, const Eigen::MatrixXd& draws)
{
    if (draws.cols() != 2) throw InvalidArgument("surrogate must have the two gap outputs");
    std::vector<OutputComparison> out;
    for (int q = 0; q < 2; ++q) {
        const auto ref = truth.column(q);
        if (ref.size() < 2) throw InvalidArgument("ground truth has fewer than two rows with a gap");
        std::vector<double> cand(draws.col(q).data(), draws.col(q).data() + draws.rows());
        out.push_back({output_names()[q], compare_distributions(ref, cand), sample_mean(ref), sample_std(ref), sample_mean(cand),
                       sample_std(cand)});
    }
    return out;
}

namespace detail {

inline std::vector<double> column_of(const Eigen::MatrixXd& m, int q) { return {m.col(q).data(), m.col(q).data() + m.rows()}; }

/// KDE curves of each candidate over a histogram of the truth, with the curve data as CSV.
inline std::pair<std::string, std::string> overlay_figure(const std::vector<double>& truth, const std::vector<std::pair<std::string, std::vector<double>>>& candidates,
                                                          int bins, const std::string& title, const std::string& xlabel)
{
    std::vector<std::pair<std::string, KDEModel>> kdes;
    for (const auto& [name, samples] : candidates) {
        try {
            kdes.emplace_back(name, kde_fit(samples));
        } catch (const InvalidArgument&) {
            // constant surrogate: no density to draw
        }
    }
    std::vector<std::pair<std::string, KDEModel>> all = kdes;
    all.insert(all.begin(), {"ground truth KDE", kde_fit(truth)});
    const std::string figure = svg::histogram_with_kdes(truth, bins, all, title, xlabel);
    auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
    const double pad = 0.25 * (*hi - *lo);
    std::ostringstream csv;
    csv << "x";
    for (const auto& k : all) csv << ',' << k.first;
    csv << '\n';
    for (int i = 0; i <= 200; ++i) {
        const double x = *lo - pad + (*hi - *lo + 2 * pad) * i / 200;
        csv << fmt17(x);
        for (const auto& k : all) csv << ',' << fmt17(k.second.density(x));
        csv << '\n';
    }
    return {csv.str(), figure};
}

/// Shared-axis 2D histograms of (gap size, gap center): truth first, then each candidate.
inline std::pair<std::string, std::string> quartet_figure(const std::vector<std::pair<std::string, Eigen::MatrixXd>>& panels, int bins)
{
    // every panel shares the truth's range, widened slightly
    svg::Range xr, yr;
    for (Eigen::Index i = 0; i < panels.at(0).second.rows(); ++i) {
        xr.include(panels[0].second(i, 0));
        yr.include(panels[0].second(i, 1));
    }
    xr.finish(0.15);
    yr.finish(0.15);
    std::vector<svg::HeatmapPanel> hp;
    std::ostringstream csv;
    csv << "panel,x_bin,y_bin,gap_size_lo,gap_size_hi,gap_center_lo,gap_center_hi,count\n";
    for (const auto& [name, m] : panels) {
        const auto h = hist2d(column_of(m, 0), column_of(m, 1), bins, bins, xr.lo, xr.hi, yr.lo, yr.hi);
        for (int xb = 0; xb < bins; ++xb)
            for (int yb = 0; yb < bins; ++yb)
                csv << name << ',' << xb << ',' << yb << ',' << fmt17(h.x_edges[xb]) << ',' << fmt17(h.x_edges[xb + 1]) << ','
                    << fmt17(h.y_edges[yb]) << ',' << fmt17(h.y_edges[yb + 1]) << ',' << h.at(xb, yb) << '\n';
        hp.push_back({name, h});
    }
    return {csv.str(), svg::heatmap_grid(hp, 2, "gap size (Hz)", "gap center (Hz)")};
}

inline Eigen::MatrixXd truth_matrix(const Dataset& truth)
{
    const auto a = truth.column(0), b = truth.column(1);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(a.size()), 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = a[i];
        m(static_cast<Eigen::Index>(i), 1) = b[i];
    }
    return m;
}

inline void write_comparison_figures(const std::filesystem::path& dir, const Dataset& truth,
                                     const std::vector<std::pair<std::string, Eigen::MatrixXd>>& surrogates, int bins)
{
    static const char* xlabels[] = {"gap size (Hz)", "gap center (Hz)"};
    for (int q = 0; q < 2; ++q) {
        std::vector<std::pair<std::string, std::vector<double>>> cands;
        for (const auto& [name, draws] : surrogates) cands.emplace_back(name, column_of(draws, q));
        const auto [csv, fig] = overlay_figure(truth.column(q), cands, bins, output_names()[q], xlabels[q]);
        detail::write_csv_and_svg(dir, output_names()[q] + "_pdf", csv, fig);
    }
    std::vector<std::pair<std::string, Eigen::MatrixXd>> panels{{"ground truth", truth_matrix(truth)}};
    for (std::size_t i = 0; i < surrogates.size() && panels.size() < 4; ++i) panels.push_back(surrogates[i]);
    const auto [csv, fig] = quartet_figure(panels, 20);
    detail::write_csv_and_svg(dir, "joint_histograms", csv, fig);
}

inline void write_comparison_header(std::ostream& os)
{
    os << "surrogate,dataset,n_points,n_excluded,pce_degree,fit_method,output,ks,mean_rel_err,std_rel_err,truth_mean,truth_std,"
          "surrogate_mean,surrogate_std,status\n";
}

} // namespace detail

/// Surrogate draws against a ground-truth dataset; report CSV plus KDE and 2D histogram figures.
inline std::vector<OutputComparison> cmd_compare(const std::filesystem::path& surrogate_path, const std::filesystem::path& truth_dir,
                                                 std::size_t n_draws, std::uint64_t seed, int bins, const RunContext& ctx)
{
    std::ifstream in(surrogate_path);
    if (!in) throw InvalidArgument("cannot open surrogate file " + surrogate_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument("surrogate file is not valid JSON: " + std::string(e.what()));
    }
    const PCESurrogate s = surrogate_from_json(j);
    const Dataset truth = read_dataset(truth_dir);
    if (!(s.joint == truth.joint)) throw InvalidArgument("surrogate and ground-truth dataset were built from different joint input distributions");
    const Eigen::MatrixXd draws = sample_surrogate(s, n_draws, seed);
    const auto cmp = compare_outputs(truth, draws);
    std::ostringstream csv;
    detail::write_comparison_header(csv);
    for (const auto& c : cmp)
        csv << "surrogate,input," << 0 << ",0," << s.basis.degree() << ',' << to_string(s.method) << ',' << c.output << ','
            << detail::fmt17(c.metrics.ks_statistic) << ',' << detail::fmt17(c.metrics.mean_rel_err) << ','
            << detail::fmt17(c.metrics.std_rel_err) << ',' << detail::fmt17(c.truth_mean) << ',' << detail::fmt17(c.truth_std) << ','
            << detail::fmt17(c.surrogate_mean) << ',' << detail::fmt17(c.surrogate_std) << ",ok\n";
    write_text_file(ctx.out_dir / "comparison.csv", csv.str());
    detail::write_comparison_figures(ctx.out_dir, truth, {{"surrogate", draws}}, bins);
    return cmp;
}

// ---------------------------------------------------------------------------
// studies

// Studies resample the design itself to each of their resolutions, not the
// config's working geometry.
inline DefectStudySetup defect_setup(const ExperimentConfig& c, const RunContext& ctx)
{
    return {load_design(c), c.nominal_materials(), c.fem(), c.gap_policy, c.seed, ctx.jobs, ctx.cache};
}

struct ResolutionStudyResult {
    double fp = 0;
    std::vector<ResolutionRow> rows;
    std::vector<std::vector<GapOutcome>> realizations;
};

inline ResolutionStudyResult run_resolution_convergence(const ExperimentConfig& c, const RunContext& ctx)
{
    ResolutionStudyResult r;
    r.fp = detail::study_value(c.study, "fp", 0.05);
    const auto resolutions = detail::json_ints(c.study, "resolutions", {10, 20, 30, 40});
    const int n = detail::study_value(c.study, "realizations", 20);
    if (n < 1) throw InvalidArgument("study.realizations must be positive");
    for (std::size_t i = 1; i < resolutions.size(); ++i)
        if (resolutions[i] <= resolutions[i - 1]) throw InvalidArgument("study.resolutions must be strictly ascending");
    const DefectStudySetup setup = defect_setup(c, ctx);
    std::ostringstream raw;
    raw << "resolution,fp,realization,gap_size,gap_center,gap_bottom,gap_top,below_band,status\n";
    for (int res : resolutions) {
        ctx.log.info("resolution " + std::to_string(res) + ": " + std::to_string(n) + " realizations");
        r.realizations.push_back(defect_realizations(setup, res, r.fp, n));
        r.rows.push_back({res, summarize(r.realizations.back())});
        std::ostringstream part;
        write_realizations_csv(part, {r.fp}, {r.realizations.back()}, res);
        const std::string s = part.str();
        raw << s.substr(s.find('\n') + 1);
    }
    std::ostringstream table;
    write_resolution_csv(table, r.rows);
    std::vector<svg::Series> series(3);
    series[0].name = "mean gap bottom";
    series[1].name = "mean gap top";
    series[2].name = "mean gap size";
    for (const auto& row : r.rows) {
        for (auto& s : series) s.x.push_back(row.resolution);
        series[0].y.push_back(row.summary.mean_bottom);
        series[1].y.push_back(row.summary.mean_top);
        series[2].y.push_back(row.summary.mean_size);
    }
    detail::write_csv_and_svg(ctx.out_dir, "resolution_convergence", table.str(),
                              svg::line_chart(series, "mean over defect realizations, FP " + svg::label(r.fp), "resolution (pixels)", "frequency (Hz)"));
    write_text_file(ctx.out_dir / "resolution_convergence_realizations.csv", raw.str());
    write_run_config(ctx.out_dir, c);
    return r;
}

struct FpNoiseStudyResult {
    std::vector<FpNoiseResult> noise; // one per resolution
    FpSweepResult sweep;
    FpNoiseResult sweep_noise;        // same-FP noise at the sweep resolution
    double ratio_size = 0;            // noise std / sweep std, gap size
    double ratio_center = 0;
};

inline FpNoiseStudyResult run_fp_noise(const ExperimentConfig& c, const RunContext& ctx)
{
    FpNoiseStudyResult r;
    const double fp = detail::study_value(c.study, "fp", 0.05);
    const auto resolutions = detail::json_ints(c.study, "resolutions", {10, 20});
    const int n = detail::study_value(c.study, "realizations", 20);
    const auto sweep_fps = detail::json_doubles(c.study, "sweep_fps", {0.0, 0.0125, 0.025, 0.0375, 0.05});
    const int sweep_n = detail::study_value(c.study, "sweep_realizations", 4);
    const int sweep_res = detail::study_value(c.study, "sweep_resolution", 20);
    const int bins = detail::study_value(c.study, "bins", 10);
    const DefectStudySetup setup = defect_setup(c, ctx);

    std::ostringstream table, raw;
    table << "resolution,fp,n_realizations,n_gaps,mean_gap_size,std_gap_size,range_gap_size,mean_gap_center,std_gap_center,range_gap_center\n";
    raw << "resolution,fp,realization,gap_size,gap_center,gap_bottom,gap_top,below_band,status\n";
    auto add_row = [&](const FpNoiseResult& x) {
        const auto& s = x.summary;
        table << x.resolution << ',' << detail::fmt17(x.fp) << ',' << s.n << ',' << s.n_gaps << ',' << detail::fmt17(s.mean_size) << ','
              << detail::fmt17(s.std_size) << ',' << detail::fmt17(s.range_size) << ',' << detail::fmt17(s.mean_center) << ','
              << detail::fmt17(s.std_center) << ',' << detail::fmt17(s.range_center) << '\n';
        std::ostringstream part;
        write_realizations_csv(part, {x.fp}, {x.realizations}, x.resolution);
        const std::string t = part.str();
        raw << t.substr(t.find('\n') + 1);
    };
    bool have_sweep_res = false;
    for (int res : resolutions) {
        ctx.log.info("fp noise at resolution " + std::to_string(res));
        r.noise.push_back(fp_noise_study(setup, fp, res, n));
        add_row(r.noise.back());
        if (res == sweep_res) {
            r.sweep_noise = r.noise.back();
            have_sweep_res = true;
        }
    }
    if (!have_sweep_res) {
        r.sweep_noise = fp_noise_study(setup, fp, sweep_res, n);
        add_row(r.sweep_noise);
    }
    ctx.log.info("fp sweep at resolution " + std::to_string(sweep_res));
    r.sweep = fp_sweep_study(setup, sweep_fps, sweep_res, sweep_n);
    r.ratio_size = r.sweep_noise.summary.std_size / r.sweep.pooled.std_size;
    r.ratio_center = r.sweep_noise.summary.std_center / r.sweep.pooled.std_center;

    std::ostringstream sweep_raw;
    write_realizations_csv(sweep_raw, r.sweep.fps, r.sweep.realizations, sweep_res);
    std::ostringstream ratio;
    ratio << "resolution,fp,noise_std_gap_size,sweep_std_gap_size,ratio_gap_size,noise_std_gap_center,sweep_std_gap_center,ratio_gap_center\n"
          << sweep_res << ',' << detail::fmt17(fp) << ',' << detail::fmt17(r.sweep_noise.summary.std_size) << ','
          << detail::fmt17(r.sweep.pooled.std_size) << ',' << detail::fmt17(r.ratio_size) << ','
          << detail::fmt17(r.sweep_noise.summary.std_center) << ',' << detail::fmt17(r.sweep.pooled.std_center) << ','
          << detail::fmt17(r.ratio_center) << '\n';

    // histogram of same-FP gap sizes per resolution
    for (const auto& x : r.noise) {
        std::vector<double> sizes;
        for (const auto& o : x.realizations)
            if (o.ok()) sizes.push_back(o.size());
        if (sizes.empty()) continue;
        const Histogram h = histogram(sizes, bins);
        std::ostringstream csv;
        csv << "bin_lo,bin_hi,count\n";
        for (int b = 0; b < bins; ++b) csv << detail::fmt17(h.edges[b]) << ',' << detail::fmt17(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
        detail::write_csv_and_svg(ctx.out_dir, "fp_noise_r" + std::to_string(x.resolution), csv.str(),
                                  svg::histogram_with_kdes(sizes, bins, {}, "gap size, FP " + svg::label(fp) + ", resolution " + std::to_string(x.resolution),
                                                           "gap size (Hz)"));
    }
    std::ostringstream sweep_table;
    sweep_table << "fp,n_realizations,n_gaps,mean_gap_size,std_gap_size,mean_gap_center,std_gap_center\n";
    svg::Series mean{"mean gap size", {}, {}}, lo{"mean - std", {}, {}}, hi{"mean + std", {}, {}};
    for (std::size_t i = 0; i < r.sweep.fps.size(); ++i) {
        const auto s = summarize(r.sweep.realizations[i]);
        sweep_table << detail::fmt17(r.sweep.fps[i]) << ',' << s.n << ',' << s.n_gaps << ',' << detail::fmt17(s.mean_size) << ','
                    << detail::fmt17(s.std_size) << ',' << detail::fmt17(s.mean_center) << ',' << detail::fmt17(s.std_center) << '\n';
        for (auto* series : {&mean, &lo, &hi}) series->x.push_back(r.sweep.fps[i]);
        mean.y.push_back(s.mean_size);
        lo.y.push_back(s.mean_size - (s.n_gaps > 1 ? s.std_size : 0.0));
        hi.y.push_back(s.mean_size + (s.n_gaps > 1 ? s.std_size : 0.0));
    }
    detail::write_csv_and_svg(ctx.out_dir, "fp_sweep", sweep_table.str(),
                              svg::line_chart({mean, lo, hi}, "gap size across an FP sweep, resolution " + std::to_string(sweep_res), "flip proportion",
                                              "gap size (Hz)"));
    write_text_file(ctx.out_dir / "fp_noise.csv", table.str());
    write_text_file(ctx.out_dir / "fp_noise_realizations.csv", raw.str());
    write_text_file(ctx.out_dir / "fp_sweep_realizations.csv", sweep_raw.str());
    write_text_file(ctx.out_dir / "fp_noise_ratio.csv", ratio.str());
    write_run_config(ctx.out_dir, c);
    ctx.log.info("noise/sweep std ratio (gap size) " + svg::label(r.ratio_size));
    return r;
}

struct FitSpec {
    int degree = 1;
    std::string method = "auto";
};

struct DatasetSpec {
    std::string name;
    SamplingPlan plan;
    std::vector<FitSpec> fits;
};

struct UqStudySpec {
    SamplingPlan truth{SamplingPlan::Kind::mc, 500, 1, 1};
    std::size_t draws = 10000;
    int bins = 30;
    std::vector<DatasetSpec> datasets;
};

/**
 * Study layout from config.study: {"truth": plan, "draws", "bins",
 * "datasets": [{"name", "plan", "fits": [{"degree", "method"}]}]}. Without a
 * dataset list the config's own plan, PCE degree and fit method are used.
 */
inline UqStudySpec uq_study_spec(const ExperimentConfig& c)
{
    const auto& s = c.study;
    UqStudySpec spec;
    if (s.contains("truth")) spec.truth = plan_from_json(s["truth"]);
    if (spec.truth.kind != SamplingPlan::Kind::mc) throw InvalidArgument("study.truth must be a Monte Carlo plan");
    spec.draws = detail::study_value<std::size_t>(s, "draws", spec.draws);
    spec.bins = detail::study_value(s, "bins", spec.bins);
    if (spec.draws < 2 || spec.bins < 1) throw InvalidArgument("study.draws must be >= 2 and study.bins >= 1");
    if (!s.contains("datasets")) {
        spec.datasets.push_back({"dataset", c.plan, {{c.pce_degree, c.fit_method}}});
        return spec;
    }
    std::set<std::string> names;
    for (const auto& d : s["datasets"]) {
        detail::reject_unknown(d, {"name", "plan", "fits"}, "study.datasets[]");
        DatasetSpec ds;
        ds.name = detail::get_or<std::string>(d, "name", "", "study.datasets[]");
        if (ds.name.empty() || ds.name.find_first_of("/\\,") != std::string::npos)
            throw InvalidArgument("study.datasets[].name must be a nonempty plain name");
        if (!names.insert(ds.name).second || ds.name == "truth") throw InvalidArgument("duplicate or reserved dataset name '" + ds.name + "'");
        if (!d.contains("plan")) throw InvalidArgument("study dataset '" + ds.name + "' has no plan");
        ds.plan = plan_from_json(d["plan"]);
        if (d.contains("fits"))
            for (const auto& f : d["fits"]) {
                detail::reject_unknown(f, {"degree", "method"}, "study.datasets[].fits[]");
                FitSpec fs{detail::get_or(f, "degree", 1, "fits"), detail::get_or<std::string>(f, "method", "auto", "fits")};
                if (fs.degree < 0) throw InvalidArgument("fit degree must be nonnegative");
                if (fs.method != "auto") (void)fit_method_from_string(fs.method);
                ds.fits.push_back(fs);
            }
        spec.datasets.push_back(std::move(ds));
    }
    return spec;
}

struct SurrogateReport {
    std::string name;    // <dataset>_p<degree>
    std::string dataset;
    FitSpec fit;
    std::size_t n_points = 0;
    std::string status = "ok"; // ok | error: <reason>
    std::optional<PCESurrogate> surrogate;
    std::vector<OutputComparison> comparisons;
};

struct UqStudyResult {
    Dataset truth;
    std::vector<std::pair<std::string, Dataset>> datasets;
    std::vector<SurrogateReport> reports;

    const SurrogateReport* report(const std::string& name) const
    {
        for (const auto& r : reports)
            if (r.name == name) return &r;
        return nullptr;
    }
};

/// Ground truth MC, training datasets, PCE fits and surrogate-vs-truth comparisons.
inline UqStudyResult run_uq_study(const ExperimentConfig& c, const RunContext& ctx, RowEvaluator evaluate = {})
{
    const UqStudySpec spec = uq_study_spec(c);
    UqStudyResult result;
    ctx.log.info("ground truth: " + std::to_string(spec.truth.n) + " MC samples");
    result.truth = generate_dataset(c, spec.truth, derive_key(c.seed, 1), ctx, evaluate);
    write_dataset(ctx.out_dir / "datasets" / "truth", result.truth);
    const std::uint64_t draw_seed = derive_key(c.seed, 2);

    std::ostringstream table;
    detail::write_comparison_header(table);
    std::vector<std::pair<std::string, Eigen::MatrixXd>> figure_draws;
    for (std::size_t k = 0; k < spec.datasets.size(); ++k) {
        const auto& ds = spec.datasets[k];
        ctx.log.info("dataset " + ds.name + ": plan " + to_json(ds.plan).dump());
        Dataset d = generate_dataset(c, ds.plan, derive_key(c.seed, 100 + k), ctx, evaluate);
        write_dataset(ctx.out_dir / "datasets" / ds.name, d);
        for (const auto& f : ds.fits) {
            SurrogateReport rep;
            rep.name = ds.name + "_p" + std::to_string(f.degree);
            rep.dataset = ds.name;
            rep.fit = f;
            rep.n_points = d.size();
            try {
                rep.surrogate = fit_dataset(d, f.degree, f.method, c.seed, ctx.log);
                write_text_file(ctx.out_dir / "surrogates" / (rep.name + ".json"), to_json(*rep.surrogate).dump(2) + "\n");
                const Eigen::MatrixXd draws = sample_surrogate(*rep.surrogate, spec.draws, draw_seed);
                rep.comparisons = compare_outputs(result.truth, draws);
                figure_draws.emplace_back(rep.name, draws);
            } catch (const std::exception& e) {
                rep.status = "error: " + detail::sanitize_reason(e.what());
                ctx.log.warn(rep.name + ": " + e.what());
            }
            const std::string method = rep.surrogate ? to_string(rep.surrogate->method) : f.method;
            const std::size_t excluded = d.failures();
            if (rep.comparisons.empty()) {
                for (const auto& out : output_names())
                    table << rep.name << ',' << ds.name << ',' << d.size() << ',' << excluded << ',' << f.degree << ',' << method << ',' << out
                          << ",nan,nan,nan,nan,nan,nan,nan," << rep.status << '\n';
            }
            for (const auto& cmp : rep.comparisons) {
                table << rep.name << ',' << ds.name << ',' << d.size() << ',' << excluded << ',' << f.degree << ',' << method << ','
                      << cmp.output << ',' << detail::fmt17(cmp.metrics.ks_statistic) << ',' << detail::fmt17(cmp.metrics.mean_rel_err) << ','
                      << detail::fmt17(cmp.metrics.std_rel_err) << ',' << detail::fmt17(cmp.truth_mean) << ','
                      << detail::fmt17(cmp.truth_std) << ',' << detail::fmt17(cmp.surrogate_mean) << ','
                      << detail::fmt17(cmp.surrogate_std) << ',' << rep.status << '\n';
                ctx.log.info(rep.name + " " + cmp.output + ": KS " + svg::label(cmp.metrics.ks_statistic));
            }
            result.reports.push_back(std::move(rep));
        }
        result.datasets.emplace_back(ds.name, std::move(d));
    }
    write_text_file(ctx.out_dir / "comparison.csv", table.str());
    if (result.truth.column(0).size() >= 2) detail::write_comparison_figures(ctx.out_dir, result.truth, figure_draws, spec.bins);
    write_run_config(ctx.out_dir, c, {{"histogram_bins", spec.bins}, {"kde", "gaussian, silverman bandwidth"}, {"surrogate_draws", spec.draws},
                                      {"joint_histogram_bins", 20}});
    return result;
}

inline const std::vector<std::string>& study_names()
{
    static const std::vector<std::string> names = {"resolution-convergence", "fp-noise", "study-1d-uniform", "study-7d-gamma",
                                                   "study-7d-gaussian"};
    return names;
}

/// Named study; the three UQ studies share the config-driven runner.
inline void cmd_study(const std::string& name, const ExperimentConfig& c, const RunContext& ctx)
{
    if (name == "resolution-convergence") {
        (void)run_resolution_convergence(c, ctx);
    } else if (name == "fp-noise") {
        (void)run_fp_noise(c, ctx);
    } else if (name == "study-1d-uniform" || name == "study-7d-gamma" || name == "study-7d-gaussian") {
        (void)run_uq_study(c, ctx);
    } else {
        throw InvalidArgument("unknown study '" + name + "' (expected resolution-convergence, fp-noise, study-1d-uniform, study-7d-gamma or study-7d-gaussian)");
    }
}

} // namespace phonon_uq
