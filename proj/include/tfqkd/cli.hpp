#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfqkd/model.hpp"
#include "tfqkd/strategy.hpp"
#include "tfqkd/timing.hpp"

namespace tfqkd::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitDomain = 1,  ///< timing conflict / zero rate under --require-positive
    kExitConfig = 2,  ///< schema violation (message names the field path)
    kExitIo = 3,      ///< unreadable input or unwritable output
};

/// Schema violation carrying the JSON field path that caused it.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Parsed run configuration (see README for the JSON schema).
struct RunConfig {
    ChannelParams channel{};
    std::optional<IntensitySet> intensities;  ///< nullopt: optimize
    ProtocolConfig protocol{};
    Strategy strategy{};
    Objective objective = Objective::Infinite;
    std::uint64_t seed = 0;
    // scan block (cmd_scan only)
    bool has_scan = false;
    std::vector<double> scan_losses;
    double split_offset_db = 10.0;
    std::vector<Strategy> scan_strategies;
};

/// Throws ConfigError naming the offending field path.
RunConfig parse_run_config(const std::string& json_text);
LoopGeometry parse_geometry(const std::string& json_text);

/// Options common to the subcommands, typically filled from command-line
/// flags by the executable front end.
struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;  ///< overrides the config's seed
    std::string out_dir = ".";
    bool analytic = false;          ///< keyrate: skip observations, use the model
    std::string observations_path;  ///< keyrate: observed-counts JSON
    bool require_positive = false;  ///< exit 1 when the requested rate is 0
    int threads = 1;
};

/// Runs the Monte Carlo simulation; writes tallies.json and
/// observations.json into out_dir and prints a gain/QBER summary.
int cmd_simulate(const Options& opts);

/// Computes yield bounds and both key rates, either from an observations
/// file (finite column uses real counts) or analytically; writes
/// keyrate.json and prints both rates.
int cmd_keyrate(const Options& opts);

/// Optimizes intensities per (loss, strategy) and writes scan.csv.
int cmd_scan(const Options& opts);

/// Checks modulation-window timing; prints per-modulator margins; exit 0
/// iff no modulator sees overlapping counter-propagating pulses.
int cmd_timing(const Options& opts);

}  // namespace tfqkd::cli
