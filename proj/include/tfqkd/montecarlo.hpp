#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "tfqkd/model.hpp"

namespace tfqkd {

/// Raw click tallies for one measurement setting.
struct SettingTally {
    std::uint64_t pulses_sent = 0;
    std::uint64_t d0_only = 0;
    std::uint64_t d1_only = 0;
    std::uint64_t both = 0;
    std::uint64_t neither = 0;
    std::uint64_t error_count = 0;  ///< X-basis settings only: wrong lone detector

    SettingTally& operator+=(const SettingTally& o);
    bool operator==(const SettingTally&) const = default;
};

/// Complete raw tallies of a simulated run: the two X-basis phase settings
/// and the 3x3 Z-basis decoy intensity pairs.
struct TallyMatrix {
    std::array<SettingTally, 2> x{};                 ///< index 0: dphi=0, 1: dphi=pi
    std::array<std::array<SettingTally, 3>, 3> z{};  ///< [alice decoy][bob decoy]
    std::uint64_t n_total = 0;

    TallyMatrix& operator+=(const TallyMatrix& o);
    bool operator==(const TallyMatrix&) const = default;
};

/// Serializes to a stable JSON schema; from_json round-trips bit-exactly.
std::string tally_to_json(const TallyMatrix& t);
TallyMatrix tally_from_json(const std::string& text);

/// One estimated probability with the counts behind it. Counts are doubles:
/// real observations are integers (exact well past 10^10), while analytic
/// expectation pipelines legitimately carry fractional expected counts.
struct SettingEstimate {
    double value = 0.0;
    double successes = 0.0;
    double trials = 0.0;
    bool defined = false;  ///< false when trials (or the conditioning count) is zero
};

/// Point estimates derived from tallies.
struct ObservedStats {
    SettingEstimate q_x_hat;                               ///< pooled over both phases
    SettingEstimate e_x_hat;                               ///< errors / single clicks
    std::array<std::array<SettingEstimate, 3>, 3> q_z_hat; ///< [alice][bob] decoy pair
    std::uint64_t n_total = 0;
};

std::string observations_to_json(const ObservedStats& o);
ObservedStats observations_from_json(const std::string& text);

/// Pulse-level stochastic simulation of the protocol. Deterministic:
/// identical (config, channel, intensities, seed) produce identical tallies
/// for any n_threads >= 1 (counter-based randomness; tallies merge by
/// addition over disjoint pulse ranges).
TallyMatrix simulate_run(const ProtocolConfig& config, const ChannelParams& channel,
                         const IntensitySet& intensities, std::uint64_t seed,
                         int n_threads = 1);

/// Converts raw tallies to gain/QBER estimates with their counts.
ObservedStats tallies_to_observations(const TallyMatrix& tallies);

}  // namespace tfqkd
