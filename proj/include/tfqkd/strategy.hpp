#pragma once

#include <string>
#include <vector>

#include "tfqkd/keyrate.hpp"
#include "tfqkd/model.hpp"

namespace tfqkd {

enum class StrategyKind { AsymmetricIntensities, AddLoss, NoCompensation };

/// A channel-asymmetry compensation strategy. AddLoss deliberately
/// attenuates the less-lossy arm; AddLoss and NoCompensation both constrain
/// the optimizer to equal signal intensities.
struct Strategy {
    StrategyKind kind = StrategyKind::AsymmetricIntensities;
    double added_db = 10.0;  ///< AddLoss only: extra attenuation in dB

    /// Stable token used in configs and CSV output.
    std::string name() const;
};

Strategy strategy_from_name(const std::string& token, double added_db = 10.0);

/// Result of applying a strategy to a physical channel.
struct StrategyApplication {
    ChannelParams effective;
    bool force_equal_signals = false;
    bool overshoot_warning = false;  ///< AddLoss flipped which arm is lossier
};

StrategyApplication apply_strategy(const ChannelParams& channel,
                                   const Strategy& strategy);

/// Which of the two rates a pipeline evaluation must produce.
enum class RateSelection { Both, InfiniteOnly, FiniteOnly };

/// Full analytic pipeline at fixed intensities: X-basis statistics and
/// Z-basis gains from the closed-form detector model, decoy LP yield bounds,
/// phase-error bound, and the infinite- and/or finite-data rates (the latter
/// from expected counts at config.n_pulses with the configured deviation
/// method). `scope` selects the LP effort; UpperParityOnly keeps
/// optimizer-loop evaluations cheap and is sound (unsolved entries take the
/// trivial upper bound 1, with negligible-weight pairs skipped).
KeyRateReport evaluate_setting(const ChannelParams& channel, const Strategy& strategy,
                               const IntensitySet& intensities,
                               const ProtocolConfig& config,
                               LPScope scope = LPScope::UpperParityOnly,
                               RateSelection select = RateSelection::Both);

enum class Objective { Infinite, Finite };

struct OptimizeResult {
    IntensitySet intensities;
    KeyRateReport report;
    bool informative = false;  ///< false when every start produced rate 0
};

/// Maximizes the selected key rate over (s_a, s_b, mu, nu), with s_a = s_b
/// enforced for AddLoss/NoCompensation, omega pinned at 0 and bounds
/// s in [1e-5, 1], mu in [0.05, 1.5], nu in [0.005, mu/1.5]. Multi-start
/// derivative-free downhill simplex (2 heuristic + 8 quasi-random starts);
/// fully deterministic.
OptimizeResult optimize_intensities(const ChannelParams& channel,
                                    const Strategy& strategy,
                                    const ProtocolConfig& config,
                                    Objective objective);

/// Maps a total Alice-Bob loss to per-arm losses with arm A (Alice) lossier
/// by offset_db: arm A carries (total + offset)/2 dB, arm B the rest.
struct SplitRule {
    double offset_db = 10.0;

    /// Throws std::invalid_argument if the split makes either arm negative.
    ChannelParams channel_for(double total_loss_db, double p_dark,
                              double visibility) const;
};

struct ScanRow {
    double total_loss_db = 0.0;
    double eta_a = 0.0;
    double eta_b = 0.0;
    Strategy strategy;
    IntensitySet intensities;
    double r_inf = 0.0;
    double r_fin = 0.0;
    double plob = 0.0;
};

/// One row per (loss, strategy), loss-major order, each with intensities
/// optimized for `objective` and both rates evaluated at the optimum. Rows
/// are independent; n_threads > 1 evaluates them concurrently with output
/// order fixed by input order.
std::vector<ScanRow> scan_losses(const std::vector<double>& losses_db,
                                 const SplitRule& split,
                                 const std::vector<Strategy>& strategies,
                                 double p_dark, double visibility,
                                 const ProtocolConfig& config,
                                 Objective objective = Objective::Infinite,
                                 int n_threads = 1);

/// Least-squares slope of log10(r_inf) against log10(eta_total) over rows
/// with positive r_inf. Throws std::invalid_argument with fewer than 4
/// positive rows.
double fit_scaling_exponent(const std::vector<ScanRow>& rows);

/// CSV with the pinned header
/// total_loss_db,strategy,s_a,s_b,mu,nu,r_inf,r_fin,plob
/// and values at 6 significant digits.
std::string scan_to_csv(const std::vector<ScanRow>& rows);

}  // namespace tfqkd
