#include "tfqkd/montecarlo.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>
#include <vector>

#include "tfqkd/optics.hpp"
#include "tfqkd/rng.hpp"

#include "json.hpp"

namespace tfqkd {

namespace {

// Random-draw slots within one pulse pair. Slot assignments are part of the
// determinism contract: changing them changes every seeded run.
enum Slot : unsigned {
    kSlotBasis = 0,
    kSlotPhaseA = 1,
    kSlotPhaseB = 2,
    kSlotDecoyA = 3,
    kSlotDecoyB = 4,
    kSlotClickD0 = 5,
    kSlotClickD1 = 6,
};

struct XSettingProbs {
    double p_correct;  // click probability of the constructive-port detector
    double p_wrong;    // click probability of the destructive-port detector
};

int pick_decoy(double u, const std::array<double, 3>& probs) {
    if (u < probs[0]) return 0;
    if (u < probs[0] + probs[1]) return 1;
    return 2;
}

void simulate_range(const ProtocolConfig& config, const ChannelParams& channel,
                    const IntensitySet& intensities, std::uint64_t seed,
                    std::uint64_t begin, std::uint64_t end, TallyMatrix& out) {
    const auto decoys = intensities.decoys();
    // X basis: the two phase settings have fixed detector intensities.
    auto [mu_c0, mu_w0] = detector_intensities(channel, intensities.s_a,
                                               intensities.s_b, 0.0);
    const XSettingProbs x_probs{click_probability(mu_c0, channel.p_dark),
                                click_probability(mu_w0, channel.p_dark)};
    // Z basis: per decoy pair, precompute arrival intensities and the
    // constant total-attenuation factor exp(-(a+b)).
    double za[3], zb[3];
    double z_sum[3][3], z_cross[3][3], z_exp_total[3][3];
    for (int i = 0; i < 3; ++i) za[i] = channel.eta_a * decoys[i];
    for (int j = 0; j < 3; ++j) zb[j] = channel.eta_b * decoys[j];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            z_sum[i][j] = za[i] + zb[j];
            z_cross[i][j] = channel.visibility * std::sqrt(za[i] * zb[j]);
            z_exp_total[i][j] = std::exp(-z_sum[i][j]);
        }
    const double one_minus_pd = 1.0 - channel.p_dark;

    for (std::uint64_t p = begin; p < end; ++p) {
        const bool x_basis = rng::u01(seed, p, kSlotBasis) < config.p_x_basis;
        if (x_basis) {
            // Each sender adds 0 or pi; dphi = 0 iff the bits agree.
            const bool bit_a = rng::u01(seed, p, kSlotPhaseA) < 0.5;
            const bool bit_b = rng::u01(seed, p, kSlotPhaseB) < 0.5;
            const int setting = (bit_a == bit_b) ? 0 : 1;  // 0: dphi=0, 1: dphi=pi
            // dphi=0 makes D0 the constructive port; at pi the roles swap.
            const double p_d0 = (setting == 0) ? x_probs.p_correct : x_probs.p_wrong;
            const double p_d1 = (setting == 0) ? x_probs.p_wrong : x_probs.p_correct;
            const bool c0 = rng::u01(seed, p, kSlotClickD0) < p_d0;
            const bool c1 = rng::u01(seed, p, kSlotClickD1) < p_d1;
            SettingTally& t = out.x[setting];
            ++t.pulses_sent;
            if (c0 && c1) ++t.both;
            else if (c0) ++t.d0_only;
            else if (c1) ++t.d1_only;
            else ++t.neither;
            // Exactly-one-click event on the destructive-port detector.
            if (c0 != c1) {
                const bool wrong = (setting == 0) ? c1 : c0;
                if (wrong) ++t.error_count;
            }
        } else {
            const int ia = pick_decoy(rng::u01(seed, p, kSlotDecoyA), config.decoy_probs);
            const int ib = pick_decoy(rng::u01(seed, p, kSlotDecoyB), config.decoy_probs);
            // Phase randomization leaves only the relative phase physical.
            const double dphi =
                2.0 * std::numbers::pi * rng::u01(seed, p, kSlotPhaseA);
            const double half = 0.5 * z_sum[ia][ib];
            double cross = z_cross[ia][ib] * std::cos(dphi);
            if (cross > half) cross = half;
            if (cross < -half) cross = -half;
            const double e0 = std::exp(-(half + cross));
            const double e1 = z_exp_total[ia][ib] / e0;
            const double p_d0 = 1.0 - one_minus_pd * e0;
            const double p_d1 = 1.0 - one_minus_pd * e1;
            const bool c0 = rng::u01(seed, p, kSlotClickD0) < p_d0;
            const bool c1 = rng::u01(seed, p, kSlotClickD1) < p_d1;
            SettingTally& t = out.z[ia][ib];
            ++t.pulses_sent;
            if (c0 && c1) ++t.both;
            else if (c0) ++t.d0_only;
            else if (c1) ++t.d1_only;
            else ++t.neither;
        }
    }
}

nlohmann::json tally_setting_json(const SettingTally& t, bool with_errors) {
    nlohmann::json j{{"pulses_sent", t.pulses_sent}, {"d0_only", t.d0_only},
                     {"d1_only", t.d1_only},         {"both", t.both},
                     {"neither", t.neither}};
    if (with_errors) j["error_count"] = t.error_count;
    return j;
}

SettingTally tally_setting_from_json(const nlohmann::json& j, bool with_errors) {
    SettingTally t;
    t.pulses_sent = j.at("pulses_sent").get<std::uint64_t>();
    t.d0_only = j.at("d0_only").get<std::uint64_t>();
    t.d1_only = j.at("d1_only").get<std::uint64_t>();
    t.both = j.at("both").get<std::uint64_t>();
    t.neither = j.at("neither").get<std::uint64_t>();
    t.error_count = with_errors ? j.at("error_count").get<std::uint64_t>() : 0;
    return t;
}

constexpr const char* kDecoyLabels[3] = {"mu", "nu", "omega"};
constexpr const char* kPhaseLabels[2] = {"0", "pi"};

SettingEstimate make_estimate(double successes, double trials) {
    SettingEstimate e;
    e.successes = successes;
    e.trials = trials;
    e.defined = trials > 0;
    e.value = e.defined ? successes / trials : 0.0;
    return e;
}

nlohmann::json estimate_json(const SettingEstimate& e) {
    return {{"value", e.value},
            {"successes", e.successes},
            {"trials", e.trials},
            {"defined", e.defined}};
}

SettingEstimate estimate_from_json(const nlohmann::json& j) {
    SettingEstimate e;
    e.value = j.at("value").get<double>();
    e.successes = j.at("successes").get<double>();
    e.trials = j.at("trials").get<double>();
    e.defined = j.at("defined").get<bool>();
    return e;
}

}  // namespace

SettingTally& SettingTally::operator+=(const SettingTally& o) {
    pulses_sent += o.pulses_sent;
    d0_only += o.d0_only;
    d1_only += o.d1_only;
    both += o.both;
    neither += o.neither;
    error_count += o.error_count;
    return *this;
}

TallyMatrix& TallyMatrix::operator+=(const TallyMatrix& o) {
    for (int s = 0; s < 2; ++s) x[s] += o.x[s];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) z[i][j] += o.z[i][j];
    n_total += o.n_total;
    return *this;
}

TallyMatrix simulate_run(const ProtocolConfig& config, const ChannelParams& channel,
                         const IntensitySet& intensities, std::uint64_t seed,
                         int n_threads) {
    config.validate();
    channel.validate();
    intensities.validate();
    if (config.n_pulses < 1.0)
        throw std::invalid_argument("config.n_pulses: cannot simulate an empty run");
    if (n_threads < 1) throw std::invalid_argument("n_threads: must be >= 1");
    const auto n_pulses = static_cast<std::uint64_t>(config.n_pulses);

    TallyMatrix total;
    if (n_threads == 1) {
        simulate_range(config, channel, intensities, seed, 0, n_pulses, total);
    } else {
        std::vector<TallyMatrix> parts(static_cast<std::size_t>(n_threads));
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(n_threads));
        const std::uint64_t chunk = n_pulses / static_cast<std::uint64_t>(n_threads);
        for (int t = 0; t < n_threads; ++t) {
            const std::uint64_t begin = chunk * static_cast<std::uint64_t>(t);
            const std::uint64_t end =
                (t == n_threads - 1) ? n_pulses : begin + chunk;
            workers.emplace_back([&, begin, end, t] {
                simulate_range(config, channel, intensities, seed, begin, end,
                               parts[static_cast<std::size_t>(t)]);
            });
        }
        for (auto& w : workers) w.join();
        // Merge in fixed thread order; integer addition is order-independent
        // anyway, so any partitioning yields the identical matrix.
        for (const auto& p : parts) total += p;
    }
    total.n_total = n_pulses;
    return total;
}

ObservedStats tallies_to_observations(const TallyMatrix& tallies) {
    if (tallies.n_total == 0)
        throw std::invalid_argument("tallies.n_total: empty tally matrix");
    ObservedStats obs;
    obs.n_total = tallies.n_total;
    std::uint64_t x_sent = 0, x_single = 0, x_errors = 0;
    for (const auto& t : tallies.x) {
        x_sent += t.pulses_sent;
        x_single += t.d0_only + t.d1_only;
        x_errors += t.error_count;
    }
    obs.q_x_hat = make_estimate(static_cast<double>(x_single),
                                static_cast<double>(x_sent));
    obs.e_x_hat = make_estimate(static_cast<double>(x_errors),
                                static_cast<double>(x_single));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const SettingTally& t = tallies.z[i][j];
            obs.q_z_hat[i][j] =
                make_estimate(static_cast<double>(t.d0_only + t.d1_only),
                              static_cast<double>(t.pulses_sent));
        }
    return obs;
}

std::string tally_to_json(const TallyMatrix& t) {
    nlohmann::json j;
    j["n_total"] = t.n_total;
    for (int s = 0; s < 2; ++s)
        j["x"][kPhaseLabels[s]] = tally_setting_json(t.x[s], true);
    for (int i = 0; i < 3; ++i)
        for (int j2 = 0; j2 < 3; ++j2)
            j["z"][std::string(kDecoyLabels[i]) + "-" + kDecoyLabels[j2]] =
                tally_setting_json(t.z[i][j2], false);
    return j.dump(2) + "\n";
}

TallyMatrix tally_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    TallyMatrix t;
    t.n_total = j.at("n_total").get<std::uint64_t>();
    for (int s = 0; s < 2; ++s)
        t.x[s] = tally_setting_from_json(j.at("x").at(kPhaseLabels[s]), true);
    for (int i = 0; i < 3; ++i)
        for (int j2 = 0; j2 < 3; ++j2)
            t.z[i][j2] = tally_setting_from_json(
                j.at("z").at(std::string(kDecoyLabels[i]) + "-" + kDecoyLabels[j2]),
                false);
    return t;
}

std::string observations_to_json(const ObservedStats& o) {
    nlohmann::json j;
    j["n_total"] = o.n_total;
    j["q_x_hat"] = estimate_json(o.q_x_hat);
    j["e_x_hat"] = estimate_json(o.e_x_hat);
    for (int i = 0; i < 3; ++i)
        for (int j2 = 0; j2 < 3; ++j2)
            j["q_z_hat"][std::string(kDecoyLabels[i]) + "-" + kDecoyLabels[j2]] =
                estimate_json(o.q_z_hat[i][j2]);
    return j.dump(2) + "\n";
}

ObservedStats observations_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ObservedStats o;
    o.n_total = j.at("n_total").get<std::uint64_t>();
    o.q_x_hat = estimate_from_json(j.at("q_x_hat"));
    o.e_x_hat = estimate_from_json(j.at("e_x_hat"));
    for (int i = 0; i < 3; ++i)
        for (int j2 = 0; j2 < 3; ++j2)
            o.q_z_hat[i][j2] = estimate_from_json(
                j.at("q_z_hat").at(std::string(kDecoyLabels[i]) + "-" + kDecoyLabels[j2]));
    return o;
}

}  // namespace tfqkd
