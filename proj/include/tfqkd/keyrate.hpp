#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tfqkd/decoy.hpp"
#include "tfqkd/model.hpp"
#include "tfqkd/montecarlo.hpp"

namespace tfqkd {

/// Breakdown of the phase-error bound: the even- and odd-parity cat-state
/// sums (amplitudes, prior to squaring) and the truncation-tail portion of
/// each, which assumes yield 1 beyond n_cut.
struct PhaseErrorDiagnostics {
    double even_sum = 0.0;
    double odd_sum = 0.0;
    double even_tail = 0.0;
    double odd_tail = 0.0;
    bool clamped = false;  ///< bound exceeded 1 and was clamped
};

/// Upper bound on the phase error rate from the cat-state expansion:
///   e_ph <= [ (sum_{n,m even} sqrt(p_n(s_a) p_m(s_b) Y_up[n][m]))^2
///           + (sum_{n,m odd}  sqrt(p_n(s_a) p_m(s_b) Y_up[n][m]))^2 ] / q_x,
/// truncated at yields.n_cut with tail terms taking Y_up = 1 (sound), then
/// clamped to [0,1]. Throws std::domain_error when q_x <= 0.
double phase_error_bound(double s_a, double s_b, const YieldBounds& yields,
                         double q_x, PhaseErrorDiagnostics* diag = nullptr);

/// The same-parity (n,m) pairs, n,m <= n_cut, whose cat-state amplitude
/// sqrt(p_n(s_a) p_m(s_b)) exceeds min_weight — the only yield entries whose
/// upper bounds materially enter phase_error_bound (Y_up = 1 elsewhere
/// shifts the bound by less than the truncation tail).
std::vector<std::pair<int, int>> significant_parity_pairs(double s_a, double s_b,
                                                          int n_cut,
                                                          double min_weight = 1e-12);

/// Asymptotic secret key rate per pulse:
///   R = max(0, q_x (1 - h(e_ph_up) - f_ec h(e_x))).
/// No key is extractable once either error argument reaches 1/2, so the
/// rate is 0 whenever e_ph_up >= 0.5 or e_x >= 0.5 (binary entropy would
/// otherwise wrap around past its maximum and inflate the rate).
double secret_key_rate_inf(double q_x, double e_x, double e_ph_up, double f_ec);

/// Finite-data secret key rate per pulse: the same formula evaluated at the
/// pessimistic deviation extremes (q_x lower bound everywhere, including the
/// phase-error denominator; e_x upper bound inside the entropy), with
/// yields_fin already derived from deviated gains. Throws
/// std::invalid_argument naming any setting with missing counts.
double secret_key_rate_fin(const ObservedStats& obs, const YieldBounds& yields_fin,
                           const IntensitySet& intensities,
                           const ProtocolConfig& config);

/// Complete result of a key-rate evaluation.
struct KeyRateReport {
    double q_x = 0.0;
    double e_x = 0.0;
    double e_ph_up = 0.0;   ///< infinite-data phase-error bound
    double e_ph_fin = 0.0;  ///< finite-data phase-error bound (0 if not computed)
    double r_inf = 0.0;
    double r_fin = 0.0;
    PhaseErrorDiagnostics diagnostics;
};

/// Serializes a report with its full evaluation context (channel,
/// intensities, protocol knobs and the declared conventions) so results are
/// auditable from the file alone.
std::string keyrate_report_to_json(const KeyRateReport& report,
                                   const ChannelParams& channel,
                                   const IntensitySet& intensities,
                                   const ProtocolConfig& config);

}  // namespace tfqkd
