// phonon-uq: band diagrams, defect realizations, datasets, PCE fits and studies.

#include "phonon_uq/phonon_uq.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <memory>
#include <optional>

namespace {

using namespace phonon_uq;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    int jobs = 1;
    std::string cache_dir;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("-c,--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed, overrides the config");
    cmd->add_option("-o,--out-dir", o.out_dir, "output directory, overrides the config");
    cmd->add_option("-j,--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--cache-dir", o.cache_dir, "dispersion cache directory (off when empty)");
    cmd->add_flag("-q,--quiet", o.quiet, "only print warnings");
}

struct Session {
    ExperimentConfig config;
    std::unique_ptr<EvalCache> cache;
    RunContext ctx;
};

Session open_session(const CommonOptions& o)
{
    Session s;
    s.config = load_config(o.config);
    if (o.seed) s.config.seed = *o.seed;
    if (!o.out_dir.empty()) s.config.output_dir = o.out_dir;
    std::filesystem::path out = s.config.output_dir;
    std::filesystem::create_directories(out);
    if (!o.cache_dir.empty()) s.cache = std::make_unique<EvalCache>(o.cache_dir);
    s.ctx.out_dir = out;
    s.ctx.jobs = o.jobs;
    s.ctx.cache = s.cache.get();
    s.ctx.log = Logger(&std::cerr, !o.quiet);
    return s;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"phonon-uq: uncertainty quantification of phononic band gaps"};
    app.require_subcommand(1);

    CommonOptions common;
    auto* dispersion = app.add_subcommand("dispersion", "band diagram and gaps of the configured geometry");
    add_common(dispersion, common);

    auto* defects = app.add_subcommand("defects", "seeded defect realizations at the configured FP");
    add_common(defects, common);

    auto* sample = app.add_subcommand("sample", "evaluate the configured sampling plan into inputs.csv/outputs.csv");
    add_common(sample, common);

    std::string dataset_dir;
    auto* fit = app.add_subcommand("fit", "fit a PCE surrogate to a dataset directory");
    add_common(fit, common);
    fit->add_option("-d,--dataset", dataset_dir, "directory written by 'sample'")->required()->check(CLI::ExistingDirectory);

    std::string surrogate_file, truth_dir;
    std::size_t draws = 10000;
    int bins = 30;
    auto* compare = app.add_subcommand("compare", "compare surrogate draws with a ground-truth dataset");
    add_common(compare, common);
    compare->add_option("-s,--surrogate", surrogate_file, "surrogate JSON")->required()->check(CLI::ExistingFile);
    compare->add_option("-t,--truth", truth_dir, "ground-truth dataset directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("-n,--draws", draws, "surrogate draws")->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
    compare->add_option("--bins", bins, "histogram bins")->check(CLI::PositiveNumber);

    std::string study_name;
    auto* study = app.add_subcommand("study", "run a named study end to end");
    add_common(study, common);
    study->add_option("name", study_name, "study name")->required()->check(CLI::IsMember(study_names()));

    CLI11_PARSE(app, argc, argv);

    try {
        Session s = open_session(common);
        if (*dispersion) {
            (void)cmd_dispersion(s.config, s.ctx);
        } else if (*defects) {
            (void)cmd_defects(s.config, s.ctx);
        } else if (*sample) {
            const Dataset d = cmd_sample(s.config, s.ctx);
            if (d.failures() == d.size()) {
                std::cerr << "error: no row produced a band gap\n";
                return 3;
            }
        } else if (*fit) {
            (void)cmd_fit(s.config, dataset_dir, s.ctx);
        } else if (*compare) {
            (void)cmd_compare(surrogate_file, truth_dir, draws, s.config.seed, bins, s.ctx);
        } else if (*study) {
            cmd_study(study_name, s.config, s.ctx);
        }
        if (s.cache) s.ctx.log.info("cache hits: " + std::to_string(s.cache->hits()));
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
