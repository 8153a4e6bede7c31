#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

/// Shared domain types and elementary mathematical functions for the
/// twin-field QKD simulator: Poisson photon-number coefficients, binary
/// entropy, dB/transmittance conversion and the repeaterless (PLOB) bound.
namespace tfqkd {

/// Optical channel between the two senders and the measuring midpoint.
/// Transmittances include detector efficiency; losses are folded per arm.
struct ChannelParams {
    double eta_a;       ///< transmittance of the Alice->Charlie arm, in (0,1]
    double eta_b;       ///< transmittance of the Bob->Charlie arm, in (0,1]
    double p_dark;      ///< dark-count probability per detector per gate, in [0,1)
    double visibility;  ///< single-photon interference visibility V, in [0,1]

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Mean photon numbers prepared by the senders. Signal intensities may be
/// asymmetric; decoy intensities are shared by both parties.
struct IntensitySet {
    double s_a;         ///< Alice signal mean photon number >= 0
    double s_b;         ///< Bob signal mean photon number >= 0
    double mu;          ///< strong decoy
    double nu;          ///< weak decoy
    double omega = 0.0; ///< vacuum decoy (exactly 0 by default)

    /// Decoys as an indexable triple {mu, nu, omega}.
    std::array<double, 3> decoys() const { return {mu, nu, omega}; }

    /// Throws std::invalid_argument on mu > nu > omega >= 0 violations.
    void validate() const;
};

/// Two-sided concentration bound used to widen finite-data estimates.
enum class DeviationMethod {
    Hoeffding,   ///< additive half-width sqrt(ln(2/eps) / (2 trials))
    ChernoffKL,  ///< KL-divergence (Chernoff) inversion; much tighter for rare events
};

/// Protocol-level knobs: pulse budget, per-pulse setting probabilities and
/// estimation parameters. Defaults declared here are artifact conventions,
/// configurable at every entry point.
struct ProtocolConfig {
    double n_pulses = 3e10;       ///< total pulse-pair count sent to the midpoint
    double p_x_basis = 0.6;       ///< probability of choosing the X basis per pulse pair
    std::array<double, 3> decoy_probs = {0.40, 0.33, 0.27}; ///< P(mu), P(nu), P(omega) given Z
    int n_cut = 10;               ///< photon-number truncation order
    double f_ec = 1.15;           ///< error-correction inefficiency factor >= 1
    double eps_est = 1e-30;       ///< per-estimate failure probability in (0,1)
    DeviationMethod deviation = DeviationMethod::ChernoffKL; ///< finite-data bound

    void validate() const;
};

/// Poisson photon-number probability e^(-intensity) intensity^k / k!.
/// Evaluated in log space; stable for k up to at least 40.
/// Throws std::domain_error for negative intensity or k < 0.
double poisson_pn(int k, double intensity);

/// Binary entropy h(x) = -x log2 x - (1-x) log2(1-x), h(0) = h(1) = 0.
/// Throws std::domain_error outside [0,1].
double binary_entropy(double x);

/// Repeaterless secret-key capacity -log2(1 - eta_total) per pulse.
/// Throws std::domain_error unless 0 < eta_total < 1.
double plob_bound(double eta_total);

/// 10^(-loss_db/10). Throws std::domain_error for negative input.
double db_to_transmittance(double loss_db);

/// -10 log10(eta). Throws std::domain_error unless 0 < eta <= 1.
double transmittance_to_db(double eta);

}  // namespace tfqkd
