#include "tfqkd/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <thread>

#include "tfqkd/optics.hpp"

namespace tfqkd {

namespace {

constexpr double kSMin = 1e-5, kSMax = 1.0;
constexpr double kMuMin = 0.05, kMuMax = 1.5;
constexpr double kNuMin = 0.005;
constexpr double kNuMaxFactor = 1.0 / 1.5;  // nu <= mu / 1.5
constexpr double kNegligibleWeight = 1e-12; // skip LP pairs below this amplitude

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }
double logit(double f) { return std::log(f / (1.0 - f)); }

/// Log-geometric interpolation between bounds, driven through a sigmoid so
/// the optimizer works on an unconstrained coordinate.
double map_to_range(double u, double lo, double hi) {
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * sigmoid(u));
}

double map_from_range(double v, double lo, double hi) {
    double f = (std::log(v) - std::log(lo)) / (std::log(hi) - std::log(lo));
    f = std::clamp(f, 0.02, 0.98);
    return logit(f);
}

/// Decodes an optimizer coordinate vector into a valid intensity set.
/// Layout: [s_a, s_b, mu, nu] (4 dims) or [s, mu, nu] (3 dims, equal signals).
IntensitySet decode(const std::vector<double>& u) {
    IntensitySet is{};
    const bool equal = u.size() == 3;
    const double s_a = map_to_range(u[0], kSMin, kSMax);
    is.s_a = s_a;
    is.s_b = equal ? s_a : map_to_range(u[1], kSMin, kSMax);
    is.mu = map_to_range(u[equal ? 1 : 2], kMuMin, kMuMax);
    const double nu_hi = is.mu * kNuMaxFactor;
    is.nu = map_to_range(u[equal ? 2 : 3], kNuMin, nu_hi);
    is.omega = 0.0;
    return is;
}

/// Radical-inverse (van der Corput) in the given base; drives the
/// deterministic quasi-random multistart.
double radical_inverse(int index, int base) {
    double inv = 1.0 / base, f = inv, value = 0.0;
    for (int i = index; i > 0; i /= base) {
        value += f * (i % base);
        f *= inv;
    }
    return value;
}

/// Standard downhill simplex, minimizing f over R^d; deterministic.
struct NelderMead {
    int max_evals = 320;
    double f_tol = 1e-5;   // relative spread of vertex values
    double x_tol = 1e-4;   // simplex edge length

    std::pair<std::vector<double>, double> run(
        const std::function<double(const std::vector<double>&)>& f,
        const std::vector<double>& start, double step) const {
        const std::size_t d = start.size();
        std::vector<std::vector<double>> pts(d + 1, start);
        std::vector<double> vals(d + 1);
        for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += step;
        int evals = 0;
        for (std::size_t i = 0; i <= d; ++i) vals[i] = (++evals, f(pts[i]));

        auto order = [&] {
            for (std::size_t i = 1; i <= d; ++i)  // insertion sort, tiny d
                for (std::size_t j = i; j > 0 && vals[j] < vals[j - 1]; --j) {
                    std::swap(vals[j], vals[j - 1]);
                    std::swap(pts[j], pts[j - 1]);
                }
        };
        order();

        while (evals < max_evals) {
            // convergence: value spread and geometric size both small
            const double spread = std::fabs(vals[d] - vals[0]);
            if (spread <= f_tol * (std::fabs(vals[0]) + 1e-12)) {
                double size = 0.0;
                for (std::size_t i = 0; i < d; ++i)
                    size = std::max(size, std::fabs(pts[d][i] - pts[0][i]));
                if (size < x_tol) break;
            }
            std::vector<double> centroid(d, 0.0);
            for (std::size_t i = 0; i < d; ++i) {
                for (std::size_t j = 0; j < d; ++j) centroid[j] += pts[i][j];
            }
            for (double& c : centroid) c /= static_cast<double>(d);

            auto blend = [&](double t) {
                std::vector<double> p(d);
                for (std::size_t j = 0; j < d; ++j)
                    p[j] = centroid[j] + t * (pts[d][j] - centroid[j]);
                return p;
            };
            auto reflected = blend(-1.0);
            const double fr = (++evals, f(reflected));
            if (fr < vals[0]) {
                auto expanded = blend(-2.0);
                const double fe = (++evals, f(expanded));
                if (fe < fr) { pts[d] = std::move(expanded); vals[d] = fe; }
                else { pts[d] = std::move(reflected); vals[d] = fr; }
            } else if (fr < vals[d - 1]) {
                pts[d] = std::move(reflected);
                vals[d] = fr;
            } else {
                auto contracted = blend(fr < vals[d] ? -0.5 : 0.5);
                const double fc = (++evals, f(contracted));
                if (fc < std::min(fr, vals[d])) {
                    pts[d] = std::move(contracted);
                    vals[d] = fc;
                } else {  // shrink toward the best vertex
                    for (std::size_t i = 1; i <= d; ++i) {
                        for (std::size_t j = 0; j < d; ++j)
                            pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
                        vals[i] = (++evals, f(pts[i]));
                        if (evals >= max_evals) break;
                    }
                }
            }
            order();
        }
        return {pts[0], vals[0]};
    }
};

void append_g6(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    out += buf;
}

}  // namespace

std::string Strategy::name() const {
    switch (kind) {
        case StrategyKind::AsymmetricIntensities: return "asym";
        case StrategyKind::AddLoss: return "add-loss";
        case StrategyKind::NoCompensation: return "no-comp";
    }
    return "asym";
}

Strategy strategy_from_name(const std::string& token, double added_db) {
    Strategy s;
    s.added_db = added_db;
    if (token == "asym") s.kind = StrategyKind::AsymmetricIntensities;
    else if (token == "add-loss") s.kind = StrategyKind::AddLoss;
    else if (token == "no-comp") s.kind = StrategyKind::NoCompensation;
    else
        throw std::invalid_argument(
            "strategy: unknown kind \"" + token +
            "\" (expected asym, add-loss or no-comp)");
    return s;
}

StrategyApplication apply_strategy(const ChannelParams& channel,
                                   const Strategy& strategy) {
    channel.validate();
    StrategyApplication app;
    app.effective = channel;
    switch (strategy.kind) {
        case StrategyKind::AsymmetricIntensities:
            break;
        case StrategyKind::NoCompensation:
            app.force_equal_signals = true;
            break;
        case StrategyKind::AddLoss: {
            if (strategy.added_db < 0.0)
                throw std::invalid_argument("strategy.added_db: must be >= 0");
            app.force_equal_signals = true;
            const double factor = db_to_transmittance(strategy.added_db);
            // Attenuate the less-lossy arm toward balance.
            if (channel.eta_b > channel.eta_a) {
                app.effective.eta_b = channel.eta_b * factor;
                app.overshoot_warning = app.effective.eta_b < channel.eta_a;
            } else {
                app.effective.eta_a = channel.eta_a * factor;
                app.overshoot_warning = app.effective.eta_a < channel.eta_b;
            }
            break;
        }
    }
    return app;
}

KeyRateReport evaluate_setting(const ChannelParams& channel, const Strategy& strategy,
                               const IntensitySet& intensities,
                               const ProtocolConfig& config, LPScope scope,
                               RateSelection select) {
    config.validate();
    intensities.validate();
    const StrategyApplication app = apply_strategy(channel, strategy);
    const ChannelParams& eff = app.effective;

    const XBasisStats xs = x_basis_stats(eff, intensities.s_a, intensities.s_b);
    const auto decoys = intensities.decoys();
    double q_z[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            q_z[i][j] = z_basis_gain(eff, decoys[i], decoys[j]);

    // Same-parity pairs that carry non-negligible cat-state weight; the LP
    // only needs upper bounds for these (Y_up = 1 elsewhere is sound).
    const std::vector<std::pair<int, int>> pairs = significant_parity_pairs(
        intensities.s_a, intensities.s_b, config.n_cut, kNegligibleWeight);
    const std::vector<std::pair<int, int>>* pair_list =
        scope == LPScope::UpperParityOnly ? &pairs : nullptr;

    KeyRateReport report;
    report.q_x = xs.q_x;
    report.e_x = xs.e_x;
    report.e_ph_up = 1.0;

    if (select != RateSelection::FiniteOnly) {
        // Infinite data: exact gains as zero-width intervals.
        GainMatrix exact;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) exact[i][j] = {q_z[i][j], q_z[i][j]};
        const YieldBounds yields =
            yield_bounds_lp(exact, intensities.mu, intensities.nu, intensities.omega,
                            config.n_cut, scope, pair_list);
        if (xs.q_x > 0.0) {
            report.e_ph_up = phase_error_bound(intensities.s_a, intensities.s_b,
                                               yields, xs.q_x, &report.diagnostics);
            report.r_inf =
                secret_key_rate_inf(xs.q_x, xs.e_x, report.e_ph_up, config.f_ec);
        }
    }

    if (select != RateSelection::InfiniteOnly) {
        // Finite data: expected counts at the configured pulse budget feed
        // the deviation intervals, exactly as observed counts would.
        ObservedStats expected;
        expected.n_total = static_cast<std::uint64_t>(config.n_pulses);
        const double x_trials = config.n_pulses * config.p_x_basis;
        const double x_singles = xs.q_x * x_trials;
        expected.q_x_hat = {xs.q_x, x_singles, x_trials, true};
        expected.e_x_hat = {xs.e_x, xs.e_x * x_singles, x_singles, x_singles > 0.0};
        const double z_total = config.n_pulses * (1.0 - config.p_x_basis);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double trials =
                    z_total * config.decoy_probs[static_cast<std::size_t>(i)] *
                    config.decoy_probs[static_cast<std::size_t>(j)];
                expected.q_z_hat[i][j] = {q_z[i][j], q_z[i][j] * trials, trials, true};
            }
        const GainMatrix gains_fin = observed_gain_intervals(expected, config);
        const YieldBounds yields_fin =
            yield_bounds_lp(gains_fin, intensities.mu, intensities.nu,
                            intensities.omega, config.n_cut, scope, pair_list);
        report.r_fin = secret_key_rate_fin(expected, yields_fin, intensities, config);
        const GainInterval qx_int =
            deviation_interval(config.deviation, expected.q_x_hat.successes,
                               expected.q_x_hat.trials, config.eps_est);
        report.e_ph_fin =
            qx_int.q_low > 0.0
                ? phase_error_bound(intensities.s_a, intensities.s_b, yields_fin,
                                    qx_int.q_low)
                : 1.0;
    }
    return report;
}

OptimizeResult optimize_intensities(const ChannelParams& channel,
                                    const Strategy& strategy,
                                    const ProtocolConfig& config,
                                    Objective objective) {
    config.validate();
    const StrategyApplication app = apply_strategy(channel, strategy);
    const std::size_t dims = app.force_equal_signals ? 3 : 4;

    auto rate_of = [&](const KeyRateReport& r) {
        return objective == Objective::Infinite ? r.r_inf : r.r_fin;
    };
    const RateSelection select = objective == Objective::Infinite
                                     ? RateSelection::InfiniteOnly
                                     : RateSelection::FiniteOnly;
    auto objective_fn = [&](const std::vector<double>& u) {
        const IntensitySet is = decode(u);
        const KeyRateReport r = evaluate_setting(channel, strategy, is, config,
                                                 LPScope::UpperParityOnly, select);
        return -rate_of(r);
    };

    // Heuristic starts: arrival-matched signals at two scales (the lossier
    // arm sends the larger signal), mid-range decoys.
    std::vector<std::vector<double>> starts;
    const double eta_ratio = app.effective.eta_a / app.effective.eta_b;
    for (const double s_scale : {0.04, 0.01}) {
        std::vector<double> u;
        if (dims == 4) {
            const double s_b = std::clamp(s_scale * eta_ratio, kSMin, kSMax);
            u = {map_from_range(s_scale, kSMin, kSMax),
                 map_from_range(s_b, kSMin, kSMax),
                 map_from_range(0.4, kMuMin, kMuMax), 0.0};
        } else {
            u = {map_from_range(s_scale / 2.0, kSMin, kSMax),
                 map_from_range(0.45, kMuMin, kMuMax), 0.0};
        }
        starts.push_back(std::move(u));
    }
    // Quasi-random starts from a Halton sequence over the coordinate box.
    constexpr int kHaltonBases[4] = {2, 3, 5, 7};
    for (int q = 1; q <= 8; ++q) {
        std::vector<double> u(dims);
        for (std::size_t dim = 0; dim < dims; ++dim)
            u[dim] = -2.5 + 5.0 * radical_inverse(q, kHaltonBases[dim]);
        starts.push_back(std::move(u));
    }

    NelderMead nm;
    std::vector<double> best_u;
    double best_f = 0.0;  // objective is <= 0 everywhere; 0 = zero rate
    for (const auto& start : starts) {
        const auto [u, f] = nm.run(objective_fn, start, 0.8);
        if (f < best_f) {
            best_f = f;
            best_u = u;
        }
    }

    OptimizeResult result;
    if (best_u.empty()) {
        // Every start collapsed to zero rate; report the first heuristic
        // start's intensities, flagged non-informative.
        result.intensities = decode(starts.front());
        result.report = evaluate_setting(channel, strategy, result.intensities,
                                         config, LPScope::UpperParityOnly);
        result.informative = false;
        return result;
    }
    result.intensities = decode(best_u);
    result.report = evaluate_setting(channel, strategy, result.intensities, config,
                                     LPScope::UpperParityOnly);
    result.informative = rate_of(result.report) > 0.0;
    return result;
}

ChannelParams SplitRule::channel_for(double total_loss_db, double p_dark,
                                     double visibility) const {
    const double loss_a = 0.5 * (total_loss_db + offset_db);
    const double loss_b = 0.5 * (total_loss_db - offset_db);
    if (loss_b < 0.0 || loss_a < 0.0)
        throw std::invalid_argument(
            "scan.split: arm loss would be negative at total " +
            std::to_string(total_loss_db) + " dB with offset " +
            std::to_string(offset_db) + " dB");
    ChannelParams ch;
    ch.eta_a = db_to_transmittance(loss_a);
    ch.eta_b = db_to_transmittance(loss_b);
    ch.p_dark = p_dark;
    ch.visibility = visibility;
    ch.validate();
    return ch;
}

std::vector<ScanRow> scan_losses(const std::vector<double>& losses_db,
                                 const SplitRule& split,
                                 const std::vector<Strategy>& strategies,
                                 double p_dark, double visibility,
                                 const ProtocolConfig& config, Objective objective,
                                 int n_threads) {
    if (losses_db.empty())
        throw std::invalid_argument("scan.losses_db: must be non-empty");
    if (n_threads < 1) throw std::invalid_argument("n_threads: must be >= 1");
    if (strategies.empty()) return {};

    std::vector<ScanRow> rows(losses_db.size() * strategies.size());
    auto fill_row = [&](std::size_t index) {
        const double loss = losses_db[index / strategies.size()];
        const Strategy& strat = strategies[index % strategies.size()];
        const ChannelParams ch = split.channel_for(loss, p_dark, visibility);
        const OptimizeResult opt =
            optimize_intensities(ch, strat, config, objective);
        ScanRow& row = rows[index];
        row.total_loss_db = loss;
        row.eta_a = ch.eta_a;
        row.eta_b = ch.eta_b;
        row.strategy = strat;
        row.intensities = opt.intensities;
        row.r_inf = opt.report.r_inf;
        row.r_fin = opt.report.r_fin;
        row.plob = plob_bound(db_to_transmittance(loss));
    };

    if (n_threads == 1) {
        for (std::size_t i = 0; i < rows.size(); ++i) fill_row(i);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t)
            workers.emplace_back([&, t] {
                for (std::size_t i = static_cast<std::size_t>(t); i < rows.size();
                     i += static_cast<std::size_t>(n_threads))
                    fill_row(i);
            });
        for (auto& w : workers) w.join();
    }
    return rows;
}

double fit_scaling_exponent(const std::vector<ScanRow>& rows) {
    std::vector<double> lx, ly;
    for (const ScanRow& r : rows)
        if (r.r_inf > 0.0) {
            lx.push_back(std::log10(db_to_transmittance(r.total_loss_db)));
            ly.push_back(std::log10(r.r_inf));
        }
    if (lx.size() < 4)
        throw std::invalid_argument(
            "fit_scaling_exponent: need at least 4 rows with positive r_inf");
    const double n = static_cast<double>(lx.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string scan_to_csv(const std::vector<ScanRow>& rows) {
    std::string out = "total_loss_db,strategy,s_a,s_b,mu,nu,r_inf,r_fin,plob\n";
    for (const ScanRow& r : rows) {
        append_g6(out, r.total_loss_db);
        out += ',';
        out += r.strategy.name();
        out += ',';
        append_g6(out, r.intensities.s_a);
        out += ',';
        append_g6(out, r.intensities.s_b);
        out += ',';
        append_g6(out, r.intensities.mu);
        out += ',';
        append_g6(out, r.intensities.nu);
        out += ',';
        append_g6(out, r.r_inf);
        out += ',';
        append_g6(out, r.r_fin);
        out += ',';
        append_g6(out, r.plob);
        out += '\n';
    }
    return out;
}

}  // namespace tfqkd
