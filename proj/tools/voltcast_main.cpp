#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voltcast/errors.hpp"
#include "voltcast/pipeline/config.hpp"
#include "voltcast/pipeline/runner.hpp"
#include "voltcast/pipeline/synth.hpp"

namespace {

using namespace voltcast;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    int64_t seed = -1;
    bool resume = false;
    bool offline = false;
};

pipeline::PipelineConfig load_config(const GlobalArgs& args) {
    if (args.config_path.empty()) throw ConfigError("--config <path> is required");
    pipeline::PipelineConfig cfg = pipeline::PipelineConfig::from_json_file(args.config_path);
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed >= 0) cfg.seed = uint64_t(args.seed);
    cfg.validate();
    return cfg;
}

int dispatch(const std::string& command, const GlobalArgs& args,
             const std::vector<std::string>& toggles, const std::string& synth_dir,
             int synth_days, int64_t synth_seed) {
    if (command == "synth") {
        pipeline::SynthOptions opts;
        opts.n_days = synth_days;
        if (synth_seed >= 0) opts.seed = uint64_t(synth_seed);
        const auto result = pipeline::generate_fixture(synth_dir, opts);
        std::printf("fixture written:\n  %s\n  %s\n  %s\n  %s\n", result.prices_csv.c_str(),
                    result.exogenous_csv.c_str(), result.corpus_dir.c_str(),
                    result.config_path.c_str());
        return 0;
    }

    pipeline::PipelineConfig cfg = load_config(args);

    if (command == "ablate") {
        std::vector<std::string> list = toggles;
        if (list.empty()) {
            // no toggles: base metrics only
        }
        const std::string table = pipeline::run_ablation(cfg, list, args.offline);
        std::fputs(table.c_str(), stdout);
        return 0;
    }

    pipeline::Runner runner(cfg, args.resume, args.offline);
    if (command == "run") {
        runner.run();
        std::printf("run complete; manifest at %s/manifest.json\n", cfg.out_dir.c_str());
    } else {
        runner.run_stage(command);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"voltcast - electricity price volatility forecasting workbench"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    GlobalArgs args;
    app.add_option("--config", args.config_path, "pipeline config (JSON)");
    app.add_option("--out", args.out_dir, "override the config's output directory");
    app.add_option("--seed", args.seed, "override the config's seed");
    app.add_flag("--resume", args.resume, "reuse artifacts from a previous identical run");
    app.add_flag("--offline", args.offline, "force the offline mock rating provider");

    const std::vector<std::string> stages = {"ingest",   "measures", "features", "rate",
                                             "fit",      "backtest", "evaluate", "plot",
                                             "run"};
    for (const auto& name : stages) app.add_subcommand(name);

    auto* ablate = app.add_subcommand("ablate");
    std::vector<std::string> toggles;
    ablate->add_option("--toggles", toggles, "components/features to disable, one run each")
        ->delimiter(',');

    auto* synth = app.add_subcommand("synth");
    std::string synth_dir = "fixture";
    int synth_days = 400;
    int64_t synth_seed = -1;
    synth->add_option("--dir", synth_dir, "output directory for the synthetic fixture");
    synth->add_option("--days", synth_days, "number of days to generate");
    synth->add_option("--synth-seed", synth_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(command, args, toggles, synth_dir, synth_days, synth_seed);
    } catch (const voltcast::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const voltcast::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const voltcast::ModelError& e) {
        std::fprintf(stderr, "model error: %s\n", e.what());
        return 4;
    } catch (const voltcast::ProviderError& e) {
        std::fprintf(stderr, "provider error: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
