#include <cstdio>

#include <CLI11.hpp>

#include "polymer/harness.hpp"

using namespace polymer;

int main(int argc, char** argv) {
    CLI::App app{"polymer-lab: half-space directed polymer simulation laboratory"};
    app.require_subcommand(1);

    struct Options {
        std::string config_path;
        std::optional<uint64_t> seed;
        std::optional<std::string> out;
        std::optional<int> threads;
        std::optional<int> replicates;
        std::optional<int> instances;
        bool dump_env = false;
    } opts;

    std::vector<CLI::App*> subs;
    for (const std::string& name : known_experiments()) {
        CLI::App* sub = app.add_subcommand(name, "run the '" + name + "' experiment");
        sub->add_option("--config", opts.config_path, "JSON experiment config");
        sub->add_option("--seed", opts.seed, "master seed (overrides config)");
        sub->add_option("--out", opts.out, "output directory (overrides config)");
        sub->add_option("--threads", opts.threads, "worker threads (overrides config)");
        sub->add_option("--replicates", opts.replicates, "replicate count (overrides config)");
        sub->add_flag("--dump-env", opts.dump_env, "write env-<replicate>.hspe snapshots");
        if (name == "validate")
            sub->add_option("--instances", opts.instances, "oracle instances (default 200)");
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg;
        const std::string experiment = app.get_subcommands().front()->get_name();
        if (!opts.config_path.empty()) {
            cfg = ExperimentConfig::from_file(opts.config_path);
            if (cfg.experiment != experiment)
                throw ConfigInvalid("experiment: config names '" + cfg.experiment +
                                    "' but the command line asked for '" + experiment + "'");
        } else {
            cfg.experiment = experiment;
        }
        if (opts.seed)
            cfg.seed = *opts.seed;
        if (opts.out)
            cfg.out_dir = *opts.out;
        if (opts.threads)
            cfg.threads = *opts.threads;
        if (opts.replicates)
            cfg.replicates = *opts.replicates;
        if (opts.dump_env)
            cfg.dump_env = true;
        if (opts.instances)
            cfg.params["instances"] = *opts.instances;
        return run_experiment(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
