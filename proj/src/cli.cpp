#include "tfqkd/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "tfqkd/decoy.hpp"
#include "tfqkd/keyrate.hpp"
#include "tfqkd/montecarlo.hpp"

namespace tfqkd::cli {
namespace {

using nlohmann::json;

/// Filesystem failure (distinct from schema problems) so the exit-code
/// mapping can tell them apart.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path);
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + path);
}

std::string out_path(const Options& opts, const char* name) {
    std::filesystem::create_directories(opts.out_dir);
    return (std::filesystem::path(opts.out_dir) / name).string();
}

// --- schema helpers: every failure names the offending field path ---------

const json& need(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    auto it = j.find(key);
    if (it == j.end())
        throw ConfigError(path + "." + key + ": missing required field");
    return *it;
}

const json* opt(const json& j, const std::string& path, const char* key) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return j.get<int>();
}

std::uint64_t as_uint64(const json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
        throw ConfigError(path + ": expected a non-negative integer");
    return j.get<std::uint64_t>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    return j.get<std::string>();
}

ChannelParams parse_channel(const json& j) {
    const json& ch = need(j, "config", "channel");
    const bool has_db = ch.contains("loss_db_a") || ch.contains("loss_db_b");
    const bool has_eta = ch.contains("eta_a") || ch.contains("eta_b");
    if (has_db && has_eta)
        throw ConfigError(
            "channel: losses in dB (loss_db_a/loss_db_b) and transmittances "
            "(eta_a/eta_b) are mutually exclusive");
    if (!has_db && !has_eta)
        throw ConfigError(
            "channel: specify either loss_db_a/loss_db_b or eta_a/eta_b");

    ChannelParams channel{};
    if (has_db) {
        channel.eta_a = db_to_transmittance(
            as_number(need(ch, "channel", "loss_db_a"), "channel.loss_db_a"));
        channel.eta_b = db_to_transmittance(
            as_number(need(ch, "channel", "loss_db_b"), "channel.loss_db_b"));
    } else {
        channel.eta_a = as_number(need(ch, "channel", "eta_a"), "channel.eta_a");
        channel.eta_b = as_number(need(ch, "channel", "eta_b"), "channel.eta_b");
    }
    channel.p_dark = as_number(need(ch, "channel", "p_dark"), "channel.p_dark");
    channel.visibility =
        as_number(need(ch, "channel", "visibility"), "channel.visibility");
    try {
        channel.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("channel.") + e.what());
    }
    return channel;
}

std::optional<IntensitySet> parse_intensities(const json& j) {
    const json& in = need(j, "config", "intensities");
    if (in.is_string()) {
        if (in.get<std::string>() != "optimize")
            throw ConfigError(
                "intensities: the only string directive is \"optimize\"");
        return std::nullopt;
    }
    IntensitySet is{};
    is.s_a = as_number(need(in, "intensities", "s_a"), "intensities.s_a");
    is.s_b = as_number(need(in, "intensities", "s_b"), "intensities.s_b");
    is.mu = as_number(need(in, "intensities", "mu"), "intensities.mu");
    is.nu = as_number(need(in, "intensities", "nu"), "intensities.nu");
    if (const json* om = opt(in, "intensities", "omega"))
        is.omega = as_number(*om, "intensities.omega");
    try {
        is.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("intensities.") + e.what());
    }
    return is;
}

DeviationMethod parse_deviation(const json& j, const std::string& path) {
    const std::string token = as_string(j, path);
    if (token == "chernoff-kl") return DeviationMethod::ChernoffKL;
    if (token == "hoeffding") return DeviationMethod::Hoeffding;
    throw ConfigError(path + ": unknown method \"" + token +
                      "\" (expected \"chernoff-kl\" or \"hoeffding\")");
}

ProtocolConfig parse_protocol(const json& j) {
    ProtocolConfig cfg{};  // defaults are the artifact conventions
    const json* p = opt(j, "config", "protocol");
    if (p != nullptr) {
        if (const json* v = opt(*p, "protocol", "n_pulses"))
            cfg.n_pulses = as_number(*v, "protocol.n_pulses");
        if (const json* v = opt(*p, "protocol", "p_x_basis"))
            cfg.p_x_basis = as_number(*v, "protocol.p_x_basis");
        if (const json* v = opt(*p, "protocol", "decoy_probs")) {
            if (!v->is_array() || v->size() != 3)
                throw ConfigError("protocol.decoy_probs: expected 3 numbers");
            for (std::size_t i = 0; i < 3; ++i)
                cfg.decoy_probs[i] = as_number((*v)[i], "protocol.decoy_probs");
        }
        if (const json* v = opt(*p, "protocol", "n_cut"))
            cfg.n_cut = as_int(*v, "protocol.n_cut");
        if (const json* v = opt(*p, "protocol", "f_ec"))
            cfg.f_ec = as_number(*v, "protocol.f_ec");
        if (const json* v = opt(*p, "protocol", "eps_est"))
            cfg.eps_est = as_number(*v, "protocol.eps_est");
        if (const json* v = opt(*p, "protocol", "deviation"))
            cfg.deviation = parse_deviation(*v, "protocol.deviation");
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("protocol.") + e.what());
    }
    return cfg;
}

Strategy parse_strategy_value(const json& v, const std::string& path) {
    try {
        if (v.is_string()) return strategy_from_name(v.get<std::string>());
        const std::string kind = as_string(need(v, path, "kind"), path + ".kind");
        double added_db = 10.0;
        if (const json* a = opt(v, path, "added_db"))
            added_db = as_number(*a, path + ".added_db");
        return strategy_from_name(kind, added_db);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

Objective parse_objective(const json& v, const std::string& path) {
    const std::string token = as_string(v, path);
    if (token == "infinite") return Objective::Infinite;
    if (token == "finite") return Objective::Finite;
    throw ConfigError(path + ": unknown objective \"" + token +
                      "\" (expected \"infinite\" or \"finite\")");
}

json parse_json_text(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw ConfigError(std::string(what) + ": not valid JSON");
    return j;
}

/// Decoy-estimator + keyrate-engine pipeline on observed counts: the
/// infinite-data column uses the point estimates as exact gains, the finite
/// column widens every estimate by the configured deviation bound.
KeyRateReport report_from_observations(const ObservedStats& obs,
                                       const IntensitySet& intensities,
                                       const ProtocolConfig& config) {
    KeyRateReport report;
    report.q_x = obs.q_x_hat.value;
    report.e_x = obs.e_x_hat.defined ? obs.e_x_hat.value : 0.0;
    report.e_ph_up = 1.0;

    const std::vector<std::pair<int, int>> pairs = significant_parity_pairs(
        intensities.s_a, intensities.s_b, config.n_cut);

    GainMatrix point;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const SettingEstimate& e = obs.q_z_hat[i][j];
            if (!e.defined || e.trials < 1.0)
                throw std::invalid_argument(
                    "observations: Z-basis setting without pulses; cannot "
                    "estimate yields");
            point[i][j] = {e.value, e.value};
        }
    const YieldBounds yields_inf =
        yield_bounds_lp(point, intensities.mu, intensities.nu, intensities.omega,
                        config.n_cut, LPScope::UpperParityOnly, &pairs);
    if (report.q_x > 0.0) {
        report.e_ph_up = phase_error_bound(intensities.s_a, intensities.s_b,
                                           yields_inf, report.q_x,
                                           &report.diagnostics);
        report.r_inf = secret_key_rate_inf(report.q_x, report.e_x, report.e_ph_up,
                                           config.f_ec);
    }

    const GainMatrix gains_fin = observed_gain_intervals(obs, config);
    const YieldBounds yields_fin =
        yield_bounds_lp(gains_fin, intensities.mu, intensities.nu,
                        intensities.omega, config.n_cut,
                        LPScope::UpperParityOnly, &pairs);
    report.r_fin = secret_key_rate_fin(obs, yields_fin, intensities, config);
    const GainInterval qx_int =
        deviation_interval(config.deviation, obs.q_x_hat.successes,
                           obs.q_x_hat.trials, config.eps_est);
    report.e_ph_fin = qx_int.q_low > 0.0
                          ? phase_error_bound(intensities.s_a, intensities.s_b,
                                              yields_fin, qx_int.q_low)
                          : 1.0;
    return report;
}

void print_setting_line(const char* label, const SettingEstimate& e,
                        bool with_qber, double qber, bool qber_defined) {
    if (with_qber)
        std::printf("  %-10s %14.7g %14.6g %14.6g%s\n", label, e.trials, e.value,
                    qber, qber_defined ? "" : " (no events)");
    else
        std::printf("  %-10s %14.7g %14.6g\n", label, e.trials, e.value);
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "domain error: %s\n", e.what());
        return kExitDomain;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDomain;
    }
}

constexpr const char* kDecoyNames[3] = {"mu", "nu", "omega"};

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    const json j = parse_json_text(json_text, "config");
    RunConfig cfg;
    cfg.channel = parse_channel(j);
    cfg.intensities = parse_intensities(j);
    cfg.protocol = parse_protocol(j);
    if (const json* s = opt(j, "config", "strategy"))
        cfg.strategy = parse_strategy_value(*s, "strategy");
    if (const json* o = opt(j, "config", "objective"))
        cfg.objective = parse_objective(*o, "objective");
    if (const json* s = opt(j, "config", "seed"))
        cfg.seed = as_uint64(*s, "seed");

    if (const json* sc = opt(j, "config", "scan")) {
        cfg.has_scan = true;
        const json& losses = need(*sc, "scan", "losses_db");
        if (!losses.is_array() || losses.empty())
            throw ConfigError("scan.losses_db: expected a nonempty array");
        for (const json& v : losses)
            cfg.scan_losses.push_back(as_number(v, "scan.losses_db"));
        if (const json* off = opt(*sc, "scan", "split_offset_db"))
            cfg.split_offset_db = as_number(*off, "scan.split_offset_db");
        if (const json* strats = opt(*sc, "scan", "strategies")) {
            if (!strats->is_array() || strats->empty())
                throw ConfigError("scan.strategies: expected a nonempty array");
            for (const json& v : *strats)
                cfg.scan_strategies.push_back(
                    parse_strategy_value(v, "scan.strategies"));
        }
    }
    return cfg;
}

LoopGeometry parse_geometry(const std::string& json_text) {
    const json j = parse_json_text(json_text, "geometry");
    LoopGeometry g{};
    g.pulse_period_ns = as_number(need(j, "geometry", "pulse_period_ns"),
                                  "geometry.pulse_period_ns");
    g.pulse_width_ns = as_number(need(j, "geometry", "pulse_width_ns"),
                                 "geometry.pulse_width_ns");
    g.loop_delay_ns = as_number(need(j, "geometry", "loop_delay_ns"),
                                "geometry.loop_delay_ns");
    const json& elements = need(j, "geometry", "elements");
    if (!elements.is_array() || elements.empty())
        throw ConfigError("geometry.elements: expected a nonempty array");
    for (std::size_t i = 0; i < elements.size(); ++i) {
        const std::string path = "geometry.elements[" + std::to_string(i) + "]";
        const json& el = elements[i];
        LoopElement e{};
        e.name = as_string(need(el, path, "name"), path + ".name");
        const std::string kind = as_string(need(el, path, "kind"), path + ".kind");
        if (kind == "beamsplitter")
            e.kind = ElementKind::Beamsplitter;
        else if (kind == "modulator")
            e.kind = ElementKind::Modulator;
        else if (kind == "other")
            e.kind = ElementKind::Other;
        else
            throw ConfigError(path + ".kind: unknown kind \"" + kind +
                              "\" (expected beamsplitter/modulator/other)");
        e.delay_ns = as_number(need(el, path, "delay_ns"), path + ".delay_ns");
        g.elements.push_back(std::move(e));
    }
    try {
        g.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("geometry.") + e.what());
    }
    return g;
}

int cmd_simulate(const Options& opts) {
    return guarded([&]() -> int {
        const RunConfig cfg = parse_run_config(read_file(opts.config_path));
        if (!cfg.intensities)
            throw ConfigError(
                "intensities: simulate requires explicit values "
                "(\"optimize\" applies to keyrate and scan)");
        const std::uint64_t seed = opts.seed.value_or(cfg.seed);

        const TallyMatrix tallies = simulate_run(cfg.protocol, cfg.channel,
                                                 *cfg.intensities, seed,
                                                 opts.threads);
        const ObservedStats obs = tallies_to_observations(tallies);

        const std::string tally_path = out_path(opts, "tallies.json");
        const std::string obs_path = out_path(opts, "observations.json");
        write_file(tally_path, tally_to_json(tallies));
        write_file(obs_path, observations_to_json(obs));

        std::printf("simulated %.0f pulse pairs (seed %llu, %d thread%s)\n",
                    static_cast<double>(tallies.n_total),
                    static_cast<unsigned long long>(seed), opts.threads,
                    opts.threads == 1 ? "" : "s");
        std::printf("  %-10s %14s %14s %14s\n", "setting", "trials", "gain",
                    "qber");
        print_setting_line("X (pooled)", obs.q_x_hat, true, obs.e_x_hat.value,
                           obs.e_x_hat.defined);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                char label[16];
                std::snprintf(label, sizeof label, "Z %s-%s", kDecoyNames[i],
                              kDecoyNames[j]);
                print_setting_line(label, obs.q_z_hat[i][j], false, 0.0, true);
            }
        std::printf("wrote %s\nwrote %s\n", tally_path.c_str(), obs_path.c_str());
        return kExitOk;
    });
}

int cmd_keyrate(const Options& opts) {
    return guarded([&]() -> int {
        const RunConfig cfg = parse_run_config(read_file(opts.config_path));

        IntensitySet intensities{};
        if (cfg.intensities) {
            intensities = *cfg.intensities;
        } else {
            const OptimizeResult opt_result = optimize_intensities(
                cfg.channel, cfg.strategy, cfg.protocol, cfg.objective);
            intensities = opt_result.intensities;
            std::printf(
                "optimized intensities (%s, %s objective): s_a=%.6g s_b=%.6g "
                "mu=%.6g nu=%.6g%s\n",
                cfg.strategy.name().c_str(),
                cfg.objective == Objective::Infinite ? "infinite" : "finite",
                intensities.s_a, intensities.s_b, intensities.mu, intensities.nu,
                opt_result.informative ? "" : " (no positive rate found)");
        }

        KeyRateReport report;
        if (opts.analytic) {
            report = evaluate_setting(cfg.channel, cfg.strategy, intensities,
                                      cfg.protocol);
        } else {
            if (opts.observations_path.empty())
                throw ConfigError(
                    "observations: pass --observations PATH or --analytic");
            const ObservedStats obs =
                observations_from_json(read_file(opts.observations_path));
            report = report_from_observations(obs, intensities, cfg.protocol);
        }

        const std::string report_path = out_path(opts, "keyrate.json");
        write_file(report_path, keyrate_report_to_json(report, cfg.channel,
                                                       intensities, cfg.protocol));

        std::printf("q_x      = %.6g\n", report.q_x);
        std::printf("e_x      = %.6g\n", report.e_x);
        std::printf("e_ph_up  = %.6g\n", report.e_ph_up);
        std::printf("r_inf    = %.6g per pulse\n", report.r_inf);
        std::printf("r_fin    = %.6g per pulse (N = %.6g)\n", report.r_fin,
                    cfg.protocol.n_pulses);
        std::printf("wrote %s\n", report_path.c_str());

        const double governing =
            cfg.objective == Objective::Finite ? report.r_fin : report.r_inf;
        if (opts.require_positive && governing <= 0.0) {
            std::fprintf(stderr, "requested %s rate is zero\n",
                         cfg.objective == Objective::Finite ? "finite"
                                                            : "infinite");
            return kExitDomain;
        }
        return kExitOk;
    });
}

int cmd_scan(const Options& opts) {
    return guarded([&]() -> int {
        const RunConfig cfg = parse_run_config(read_file(opts.config_path));
        if (!cfg.has_scan)
            throw ConfigError("scan: missing scan block (losses_db, ...)");

        std::vector<Strategy> strategies = cfg.scan_strategies;
        if (strategies.empty())
            strategies = {Strategy{StrategyKind::AsymmetricIntensities},
                          Strategy{StrategyKind::AddLoss},
                          Strategy{StrategyKind::NoCompensation}};

        const SplitRule split{cfg.split_offset_db};
        const std::vector<ScanRow> rows =
            scan_losses(cfg.scan_losses, split, strategies, cfg.channel.p_dark,
                        cfg.channel.visibility, cfg.protocol, cfg.objective,
                        opts.threads);

        const std::string csv_path = out_path(opts, "scan.csv");
        write_file(csv_path, scan_to_csv(rows));

        std::printf("  %8s %-10s %12s %12s %12s\n", "loss_db", "strategy",
                    "r_inf", "r_fin", "plob");
        bool any_zero = false;
        for (const ScanRow& row : rows) {
            const double governing =
                cfg.objective == Objective::Finite ? row.r_fin : row.r_inf;
            if (governing <= 0.0) any_zero = true;
            std::printf("  %8.6g %-10s %12.6g %12.6g %12.6g%s\n",
                        row.total_loss_db, row.strategy.name().c_str(),
                        row.r_inf, row.r_fin, row.plob,
                        governing <= 0.0 ? "  [zero rate]" : "");
        }
        std::printf("wrote %s (%zu rows)\n", csv_path.c_str(), rows.size());

        if (opts.require_positive && any_zero) {
            std::fprintf(stderr, "at least one scan row has zero %s rate\n",
                         cfg.objective == Objective::Finite ? "finite"
                                                            : "infinite");
            return kExitDomain;
        }
        return kExitOk;
    });
}

int cmd_timing(const Options& opts) {
    return guarded([&]() -> int {
        const LoopGeometry geometry = parse_geometry(read_file(opts.config_path));
        const TimingReport report = check_modulation_windows(geometry);

        std::printf("  %-16s %12s %12s %12s %12s  %s\n", "modulator",
                    "cw_phase_ns", "ccw_phase_ns", "separation", "margin_ns",
                    "status");
        for (const ModulatorTiming& m : report.modulators)
            std::printf("  %-16s %12.6g %12.6g %12.6g %12.6g  %s\n",
                        m.name.c_str(), m.cw_phase_ns, m.ccw_phase_ns,
                        m.separation_ns, m.margin_ns,
                        m.conflict ? "CONFLICT" : "ok");
        std::printf("timing check: %s\n", report.pass ? "PASS" : "FAIL");
        return report.pass ? kExitOk : kExitDomain;
    });
}

}  // namespace tfqkd::cli
