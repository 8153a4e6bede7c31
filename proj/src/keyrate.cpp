#include "tfqkd/keyrate.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace tfqkd {

namespace {

/// Sum over one parity class of sqrt(p_k(s)), taken to convergence. The
/// product of two such sums factorizes the double sum over all (n,m) of a
/// given parity with Y = 1.
double parity_amplitude_sum(double s, int parity) {
    double total = 0.0;
    for (int n = parity; n <= 400; n += 2) {
        const double term = std::sqrt(poisson_pn(n, s));
        total += term;
        if (n > 4 && term < 1e-30) break;
    }
    return total;
}

double entropy_term(double e_x, double e_ph, double f_ec) {
    return 1.0 - binary_entropy(e_ph) - f_ec * binary_entropy(e_x);
}

}  // namespace

double phase_error_bound(double s_a, double s_b, const YieldBounds& yields,
                         double q_x, PhaseErrorDiagnostics* diag) {
    if (!(q_x > 0.0))
        throw std::domain_error("phase_error_bound: q_x must be > 0");
    if (!(s_a >= 0.0 && s_b >= 0.0))
        throw std::domain_error("phase_error_bound: intensities must be >= 0");
    const int k = yields.n_cut + 1;
    if (static_cast<int>(yields.y_up.size()) != k)
        throw std::invalid_argument("yields: inconsistent n_cut");

    PhaseErrorDiagnostics d;
    double sums[2] = {0.0, 0.0};   // truncated parts, even / odd
    double tails[2] = {0.0, 0.0};  // beyond-n_cut parts at Y = 1
    for (int parity = 0; parity < 2; ++parity) {
        double truncated = 0.0;
        double truncated_full_yield = 0.0;
        for (int n = parity; n < k; n += 2) {
            const double pa = poisson_pn(n, s_a);
            for (int m = parity; m < k; m += 2) {
                const double w = std::sqrt(pa * poisson_pn(m, s_b));
                truncated += w * std::sqrt(yields.y_up[n][m]);
                truncated_full_yield += w;
            }
        }
        // Tail = (full factorized double sum at Y=1) minus its truncated part.
        const double full = parity_amplitude_sum(s_a, parity) *
                            parity_amplitude_sum(s_b, parity);
        tails[parity] = std::max(0.0, full - truncated_full_yield);
        sums[parity] = truncated + tails[parity];
    }
    d.even_sum = sums[0];
    d.odd_sum = sums[1];
    d.even_tail = tails[0];
    d.odd_tail = tails[1];

    double bound = (sums[0] * sums[0] + sums[1] * sums[1]) / q_x;
    if (bound > 1.0) {
        bound = 1.0;
        d.clamped = true;
    }
    if (diag != nullptr) *diag = d;
    return bound;
}

std::vector<std::pair<int, int>> significant_parity_pairs(double s_a, double s_b,
                                                          int n_cut,
                                                          double min_weight) {
    std::vector<std::pair<int, int>> pairs;
    for (int parity = 0; parity < 2; ++parity)
        for (int n = parity; n <= n_cut; n += 2)
            for (int m = parity; m <= n_cut; m += 2)
                if (std::sqrt(poisson_pn(n, s_a) * poisson_pn(m, s_b)) > min_weight)
                    pairs.emplace_back(n, m);
    return pairs;
}

double secret_key_rate_inf(double q_x, double e_x, double e_ph_up, double f_ec) {
    if (!(q_x >= 0.0 && q_x <= 1.0))
        throw std::domain_error("secret_key_rate_inf: q_x outside [0,1]");
    if (!(e_x >= 0.0 && e_x <= 1.0))
        throw std::domain_error("secret_key_rate_inf: e_x outside [0,1]");
    if (!(e_ph_up >= 0.0 && e_ph_up <= 1.0))
        throw std::domain_error("secret_key_rate_inf: e_ph_up outside [0,1]");
    if (!(f_ec >= 1.0))
        throw std::domain_error("secret_key_rate_inf: f_ec must be >= 1");
    if (e_ph_up >= 0.5 || e_x >= 0.5) return 0.0;
    return std::max(0.0, q_x * entropy_term(e_x, e_ph_up, f_ec));
}

double secret_key_rate_fin(const ObservedStats& obs, const YieldBounds& yields_fin,
                           const IntensitySet& intensities,
                           const ProtocolConfig& config) {
    if (!obs.q_x_hat.defined || obs.q_x_hat.trials < 1.0)
        throw std::invalid_argument(
            "observations.q_x_hat: no X-basis pulses recorded");
    const GainInterval qx_int = deviation_interval(
        config.deviation, obs.q_x_hat.successes, obs.q_x_hat.trials, config.eps_est);
    const double q_x_low = qx_int.q_low;
    if (q_x_low <= 0.0) return 0.0;

    // QBER upper extreme among sifted (exactly-one-click) X events. Zero
    // sifted events means no information: e_x_up = 1 and thus zero rate.
    double e_x_up = 1.0;
    if (obs.e_x_hat.trials >= 1.0) {
        e_x_up = deviation_interval(config.deviation, obs.e_x_hat.successes,
                                    obs.e_x_hat.trials, config.eps_est)
                     .q_up;
    }
    if (e_x_up >= 0.5) return 0.0;

    const double e_ph =
        phase_error_bound(intensities.s_a, intensities.s_b, yields_fin, q_x_low);
    if (e_ph >= 0.5) return 0.0;
    return std::max(0.0, q_x_low * entropy_term(e_x_up, e_ph, config.f_ec));
}

std::string keyrate_report_to_json(const KeyRateReport& report,
                                   const ChannelParams& channel,
                                   const IntensitySet& intensities,
                                   const ProtocolConfig& config) {
    nlohmann::json j;
    j["rates"] = {{"r_inf", report.r_inf}, {"r_fin", report.r_fin}};
    j["x_basis"] = {{"q_x", report.q_x}, {"e_x", report.e_x}};
    j["phase_error"] = {{"e_ph_up", report.e_ph_up},
                        {"e_ph_fin", report.e_ph_fin},
                        {"even_sum", report.diagnostics.even_sum},
                        {"odd_sum", report.diagnostics.odd_sum},
                        {"even_tail", report.diagnostics.even_tail},
                        {"odd_tail", report.diagnostics.odd_tail},
                        {"clamped", report.diagnostics.clamped}};
    j["channel"] = {{"eta_a", channel.eta_a},
                    {"eta_b", channel.eta_b},
                    {"p_dark", channel.p_dark},
                    {"visibility", channel.visibility}};
    j["intensities"] = {{"s_a", intensities.s_a},
                        {"s_b", intensities.s_b},
                        {"mu", intensities.mu},
                        {"nu", intensities.nu},
                        {"omega", intensities.omega}};
    j["protocol"] = {
        {"n_pulses", config.n_pulses},
        {"p_x_basis", config.p_x_basis},
        {"decoy_probs", config.decoy_probs},
        {"n_cut", config.n_cut},
        {"f_ec", config.f_ec},
        {"eps_est", config.eps_est},
        {"deviation",
         config.deviation == DeviationMethod::Hoeffding ? "hoeffding" : "chernoff-kl"}};
    j["conventions"] = {
        {"double_clicks", "discarded"},
        {"correct_detector_at_dphi0", "d0"},
        {"sifting_factors", "omitted from per-pulse normalization"},
        {"rate_zero_guard", "rate forced to 0 when e_ph or e_x reaches 0.5"},
        {"finite_extremes", "q_x lower bound everywhere; e_x upper bound in h"}};
    return j.dump(2) + "\n";
}

}  // namespace tfqkd
