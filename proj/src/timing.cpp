#include "tfqkd/timing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tfqkd {

namespace {

/// Non-negative remainder of x modulo p (p > 0).
double positive_mod(double x, double p) {
    double r = std::fmod(x, p);
    if (r < 0.0) r += p;
    return r;
}

/// Circular distance between two phases in [0, p).
double circular_distance(double u, double v, double p) {
    double d = std::fabs(u - v);
    return std::min(d, p - d);
}

}  // namespace

double fiber_delay_ns(double length_km) {
    if (length_km < 0.0) throw std::domain_error("fiber_delay_ns: length must be >= 0");
    return length_km * 1e3 / kFiberLightSpeed * 1e9;
}

void LoopGeometry::validate() const {
    if (elements.empty())
        throw std::invalid_argument("geometry.elements: must be non-empty");
    int n_bs = 0;
    for (const auto& e : elements) {
        if (e.delay_ns < 0.0)
            throw std::invalid_argument("geometry.elements[" + e.name +
                                        "].delay_ns: must be >= 0");
        if (e.kind == ElementKind::Beamsplitter) ++n_bs;
    }
    if (n_bs != 1)
        throw std::invalid_argument(
            "geometry.elements: exactly one beamsplitter element required");
    if (!(loop_delay_ns > 0.0))
        throw std::invalid_argument("geometry.loop_delay_ns: must be > 0");
    if (!(pulse_period_ns > 0.0))
        throw std::invalid_argument("geometry.pulse_period_ns: must be > 0");
    if (!(pulse_width_ns > 0.0))
        throw std::invalid_argument("geometry.pulse_width_ns: must be > 0");
    if (pulse_width_ns >= pulse_period_ns)
        throw std::invalid_argument(
            "geometry.pulse_width_ns: must be smaller than pulse_period_ns");
}

TimingReport check_modulation_windows(const LoopGeometry& geometry) {
    geometry.validate();
    const double T = geometry.loop_delay_ns;
    const double P = geometry.pulse_period_ns;
    const double W = geometry.pulse_width_ns;

    double bs_delay = 0.0;
    for (const auto& e : geometry.elements)
        if (e.kind == ElementKind::Beamsplitter) bs_delay = e.delay_ns;

    TimingReport report;
    report.pass = true;
    for (const auto& e : geometry.elements) {
        if (e.kind != ElementKind::Modulator) continue;
        // Pulses launch from the beamsplitter in both directions every P ns.
        // The clockwise pulse reaches this element after the clockwise delay
        // from the BS; the counter-clockwise one after the remainder of the
        // loop. Only the arrival phases modulo the period matter.
        const double cw_delay = positive_mod(e.delay_ns - bs_delay, T);
        const double ccw_delay = T - cw_delay;
        ModulatorTiming mt;
        mt.name = e.name;
        mt.cw_phase_ns = positive_mod(cw_delay, P);
        mt.ccw_phase_ns = positive_mod(ccw_delay, P);
        mt.separation_ns = circular_distance(mt.cw_phase_ns, mt.ccw_phase_ns, P);
        mt.margin_ns = mt.separation_ns - W;
        mt.conflict = !(mt.separation_ns > W);
        if (mt.conflict) report.pass = false;
        report.modulators.push_back(std::move(mt));
    }
    return report;
}

}  // namespace tfqkd
