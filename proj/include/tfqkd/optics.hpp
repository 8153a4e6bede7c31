#pragma once

#include <utility>

#include "tfqkd/model.hpp"

/// Closed-form expected detection statistics for coherent-state interference
/// at the midpoint's 50:50 beamsplitter with threshold detectors, dark counts
/// and finite visibility, plus an exact Fock-space yield oracle.
namespace tfqkd {

/// X-basis gain and bit error probability.
struct XBasisStats {
    double q_x;  ///< P(exactly one detector clicks) per X-basis pulse pair
    double e_x;  ///< P(wrong detector | exactly one click); 0 when undefined
    bool e_x_defined;  ///< false when q_x = 0 makes the conditional undefined
};

/// Mean photon numbers (mu_d0, mu_d1) at the two detectors for arrival
/// intensities a = eta_a*s_a, b = eta_b*s_b and relative phase delta_phi:
///   mu_d0 = (a + b + 2 V sqrt(ab) cos delta_phi) / 2,  mu_d1 = (a+b) - mu_d0.
/// The sum equals a + b exactly (energy conservation).
std::pair<double, double> detector_intensities(const ChannelParams& ch, double s_a,
                                               double s_b, double delta_phi);

/// Threshold-detector click probability 1 - (1 - p_dark) e^(-mu).
double click_probability(double mu, double p_dark);

/// Exactly-one-click gain and QBER for signal states, averaged over the two
/// equiprobable phase settings delta_phi in {0, pi}. Convention: delta_phi=0
/// makes D0 the correct announcement.
XBasisStats x_basis_stats(const ChannelParams& ch, double s_a, double s_b);

/// Probability of an exactly-one-click event per Z-basis pulse pair for sent
/// intensities (a_int, b_int), averaged over a uniform relative phase by
/// n_points-point periodic trapezoid quadrature (relative error < 1e-8 at the
/// default order, verified by doubling).
double z_basis_gain(const ChannelParams& ch, double a_int, double b_int,
                    int n_points = 256);

/// Exact exactly-one-click probability for Fock inputs |n> x |m>: binomial
/// thinning by the arm transmittances, then the 50:50 beamsplitter in the
/// Fock basis, threshold detectors and dark counts. Visibility V < 1 mixes
/// the coherent beamsplitter expansion (weight V^2) with independent 50/50
/// routing (weight 1 - V^2). Throws std::domain_error for n or m above 64.
double true_yield(const ChannelParams& ch, int n, int m);

}  // namespace tfqkd
