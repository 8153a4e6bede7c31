#pragma once

#include <string>
#include <vector>

namespace tfqkd {

/// Speed of light in standard single-mode fiber, meters per second.
inline constexpr double kFiberLightSpeed = 2.04e8;

/// One-way propagation delay of a fiber of the given length, in nanoseconds.
double fiber_delay_ns(double length_km);

enum class ElementKind { Beamsplitter, Modulator, Other };

/// One element on the loop, located by its propagation delay from an
/// arbitrary (but common) origin, measured in the clockwise direction.
struct LoopElement {
    std::string name;
    ElementKind kind = ElementKind::Other;
    double delay_ns = 0.0;
};

/// A Sagnac-loop layout. Pulses enter and leave at the beamsplitter and
/// traverse the loop in both directions; `loop_delay_ns` is the total one-way
/// propagation delay around the loop. Only relative delays matter: shifting
/// every element (including the beamsplitter) by a constant leaves all
/// results unchanged.
struct LoopGeometry {
    std::vector<LoopElement> elements;  ///< must contain exactly one beamsplitter
    double loop_delay_ns = 0.0;
    double pulse_period_ns = 0.0;
    double pulse_width_ns = 0.0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Timing analysis of one modulator: phases (mod pulse_period) at which the
/// clockwise and counter-clockwise pulse trains arrive, their circular
/// separation, and the margin relative to the pulse width.
struct ModulatorTiming {
    std::string name;
    double cw_phase_ns = 0.0;
    double ccw_phase_ns = 0.0;
    double separation_ns = 0.0;  ///< circular distance between the two phases
    double margin_ns = 0.0;      ///< separation - pulse_width; conflict iff <= 0
    bool conflict = false;
};

struct TimingReport {
    bool pass = false;
    std::vector<ModulatorTiming> modulators;
};

/// Checks that counter-propagating pulse trains never overlap at any
/// modulator: for each modulator, the clockwise and counter-clockwise arrival
/// phases (mod pulse_period) must be separated by more than pulse_width.
TimingReport check_modulation_windows(const LoopGeometry& geometry);

}  // namespace tfqkd
