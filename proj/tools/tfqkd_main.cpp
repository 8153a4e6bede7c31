// Command-line front end for the twin-field QKD simulator.
//
//   tfqkd simulate --config run.json [--seed N] [--out DIR] [--threads K]
//   tfqkd keyrate  --config run.json (--analytic | --observations FILE)
//                  [--out DIR] [--require-positive]
//   tfqkd scan     --config run.json [--out DIR] [--threads K]
//                  [--require-positive]
//   tfqkd timing   --config geometry.json
//
// Exit codes: 0 success; 1 domain failure (timing conflict, or zero rate
// under --require-positive); 2 config/schema error; 3 I/O error.

#include <cstdint>

#include "CLI11.hpp"

#include "tfqkd/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Twin-field QKD simulator: pulse-level Monte Carlo, decoy-state "
                 "yield bounds, key rates and asymmetry-compensation strategies"};
    app.require_subcommand(1);

    tfqkd::cli::Options opts;
    std::uint64_t seed_flag = 0;

    auto add_common = [&](CLI::App* sub, bool with_seed, bool with_threads) {
        sub->add_option("--config", opts.config_path, "JSON configuration file")
            ->required();
        sub->add_option("--out", opts.out_dir, "output directory (default: .)");
        if (with_seed)
            sub->add_option("--seed", seed_flag,
                            "random seed (overrides the config's seed)");
        if (with_threads)
            sub->add_option("--threads", opts.threads,
                            "worker threads (default: 1)")
                ->check(CLI::Range(1, 256));
    };

    CLI::App* simulate = app.add_subcommand(
        "simulate", "Monte Carlo run; writes tallies.json and observations.json");
    add_common(simulate, true, true);

    CLI::App* keyrate = app.add_subcommand(
        "keyrate", "decoy yield bounds and key rates; writes keyrate.json");
    add_common(keyrate, false, false);
    keyrate->add_flag("--analytic", opts.analytic,
                      "use the closed-form model instead of observed counts");
    keyrate->add_option("--observations", opts.observations_path,
                        "observations JSON produced by simulate");
    keyrate->add_flag("--require-positive", opts.require_positive,
                      "exit 1 if the requested rate is zero");

    CLI::App* scan = app.add_subcommand(
        "scan", "optimize intensities per (loss, strategy); writes scan.csv");
    add_common(scan, false, true);
    scan->add_flag("--require-positive", opts.require_positive,
                   "exit 1 if any row's requested rate is zero");

    CLI::App* timing = app.add_subcommand(
        "timing", "check counter-propagating pulse windows at the modulators");
    timing->add_option("--config", opts.config_path, "loop geometry JSON file")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : tfqkd::cli::kExitConfig;
    }

    if (simulate->parsed()) {
        if (simulate->count("--seed") > 0) opts.seed = seed_flag;
        return tfqkd::cli::cmd_simulate(opts);
    }
    if (keyrate->parsed()) return tfqkd::cli::cmd_keyrate(opts);
    if (scan->parsed()) return tfqkd::cli::cmd_scan(opts);
    return tfqkd::cli::cmd_timing(opts);
}
