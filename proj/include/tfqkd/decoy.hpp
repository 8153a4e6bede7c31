#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "tfqkd/model.hpp"
#include "tfqkd/montecarlo.hpp"

namespace tfqkd {

/// Two-sided bracket on a true event probability.
struct GainInterval {
    double q_low = 0.0;
    double q_up = 1.0;
};

using GainMatrix = std::array<std::array<GainInterval, 3>, 3>;

/// Two-sided Hoeffding interval: estimate +- sqrt(ln(2/eps) / (2 trials)),
/// clamped to [0,1]. Counts may be fractional (expected counts are legal).
/// Throws std::invalid_argument on successes > trials, trials < 1 or eps
/// outside (0,1).
GainInterval finite_deviation(double successes, double trials, double eps);

/// Two-sided Chernoff (KL-divergence) interval: all q with
/// trials * KL(estimate || q) <= ln(2/eps). Far tighter than Hoeffding for
/// rare events; same preconditions.
GainInterval chernoff_deviation(double successes, double trials, double eps);

/// Dispatch on the configured method.
GainInterval deviation_interval(DeviationMethod method, double successes,
                                double trials, double eps);

/// Per-pair deviation intervals for the nine Z-basis gains of an observed
/// run. Throws std::invalid_argument naming any setting with zero trials.
GainMatrix observed_gain_intervals(const ObservedStats& obs,
                                   const ProtocolConfig& config);

/// Upper/lower bounds on the photon-number yields Y_nm.
struct YieldBounds {
    int n_cut = 0;
    std::vector<std::vector<double>> y_low;  ///< (n_cut+1)^2, row n, column m
    std::vector<std::vector<double>> y_up;
    bool trivial_fallback = false;  ///< true if the LP was infeasible/failed

    std::string to_json() const;
};

/// Which linear programs to solve. Entries not solved keep the sound
/// trivial values y_low = 0, y_up = 1.
enum class LPScope {
    Full,             ///< min and max for every (n,m) <= n_cut
    UpperParityOnly,  ///< max only, same-parity pairs (the phase-error inputs)
};

/// Bounds the yields from the nine decoy-pair gain intervals by linear
/// programming over {Y_ij in [0,1] : 0 <= i,j <= n_cut} with the two-sided
/// Poisson-mixture constraints
///   q_low(a,b) - T(a,b) <= sum p_i(a) p_j(b) Y_ij <= q_up(a,b),
/// where T(a,b) is the Poisson tail mass beyond n_cut. An infeasible system
/// (possible with noisy finite data) yields trivial [0,1] bounds with
/// trivial_fallback set; the solver never throws for numeric reasons.
///
/// `upper_pairs`, when given with UpperParityOnly, restricts the solved
/// maximizations to exactly those (n,m) pairs (callers drop pairs whose
/// phase-error weight is negligible; Y_up = 1 is always sound).
YieldBounds yield_bounds_lp(const GainMatrix& gains, double mu, double nu,
                            double omega, int n_cut, LPScope scope = LPScope::Full,
                            const std::vector<std::pair<int, int>>* upper_pairs = nullptr);

}  // namespace tfqkd
