#include "tfqkd/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace tfqkd {

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
}

}  // namespace

void ChannelParams::validate() const {
    if (!(eta_a > 0.0 && eta_a <= 1.0)) bad_field("channel.eta_a", "must be in (0,1]");
    if (!(eta_b > 0.0 && eta_b <= 1.0)) bad_field("channel.eta_b", "must be in (0,1]");
    if (!(p_dark >= 0.0 && p_dark < 1.0)) bad_field("channel.p_dark", "must be in [0,1)");
    if (!(visibility >= 0.0 && visibility <= 1.0)) bad_field("channel.visibility", "must be in [0,1]");
}

void IntensitySet::validate() const {
    if (!(std::isfinite(s_a) && s_a >= 0.0)) bad_field("intensities.s_a", "must be finite and >= 0");
    if (!(std::isfinite(s_b) && s_b >= 0.0)) bad_field("intensities.s_b", "must be finite and >= 0");
    if (!(std::isfinite(mu) && std::isfinite(nu) && std::isfinite(omega)))
        bad_field("intensities", "decoys must be finite");
    if (!(omega >= 0.0)) bad_field("intensities.omega", "must be >= 0");
    if (!(mu > nu && nu > omega)) bad_field("intensities", "require mu > nu > omega");
}

void ProtocolConfig::validate() const {
    if (!(n_pulses >= 1.0)) bad_field("protocol.n_pulses", "must be >= 1");
    if (!(p_x_basis > 0.0 && p_x_basis < 1.0)) bad_field("protocol.p_x_basis", "must be in (0,1)");
    double sum = 0.0;
    for (double p : decoy_probs) {
        if (!(p > 0.0)) bad_field("protocol.decoy_probs", "each entry must be > 0");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) bad_field("protocol.decoy_probs", "must sum to 1");
    if (n_cut < 2) bad_field("protocol.n_cut", "must be >= 2");
    if (n_cut > 40) bad_field("protocol.n_cut", "must be <= 40");
    if (!(f_ec >= 1.0)) bad_field("protocol.f_ec", "must be >= 1");
    if (!(eps_est > 0.0 && eps_est < 1.0)) bad_field("protocol.eps_est", "must be in (0,1)");
}

double poisson_pn(int k, double intensity) {
    if (k < 0) throw std::domain_error("poisson_pn: k must be >= 0");
    if (!(intensity >= 0.0)) throw std::domain_error("poisson_pn: intensity must be >= 0");
    if (intensity == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(intensity) - intensity - std::lgamma(k + 1.0));
}

double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("binary_entropy: argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double plob_bound(double eta_total) {
    if (!(eta_total > 0.0 && eta_total < 1.0))
        throw std::domain_error("plob_bound: eta_total must be in (0,1)");
    return -std::log1p(-eta_total) / std::numbers::ln2;
}

double db_to_transmittance(double loss_db) {
    if (!(loss_db >= 0.0)) throw std::domain_error("db_to_transmittance: loss must be >= 0 dB");
    return std::pow(10.0, -loss_db / 10.0);
}

double transmittance_to_db(double eta) {
    if (!(eta > 0.0 && eta <= 1.0))
        throw std::domain_error("transmittance_to_db: eta must be in (0,1]");
    return -10.0 * std::log10(eta);
}

}  // namespace tfqkd
