#include "tfqkd/decoy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tfqkd/simplex.hpp"

#include "json.hpp"

namespace tfqkd {

namespace {

void check_deviation_inputs(double successes, double trials, double eps) {
    if (!(trials >= 1.0))
        throw std::invalid_argument("deviation.trials: must be >= 1");
    if (!(successes >= 0.0 && successes <= trials))
        throw std::invalid_argument("deviation.successes: must lie in [0, trials]");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("deviation.eps: must lie in (0,1)");
}

/// Bernoulli KL divergence KL(p || q), with the usual conventions at the
/// edges (infinite unless p matches the degenerate q).
double kl_bernoulli(double p, double q) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (q <= 0.0) return p == 0.0 ? 0.0 : inf;
    if (q >= 1.0) return p == 1.0 ? 0.0 : inf;
    double t = 0.0;
    if (p > 0.0) t += p * std::log(p / q);
    if (p < 1.0) t += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    return t;
}

/// Largest q >= qhat with KL(qhat || q) <= beta (KL grows monotonically
/// away from qhat). Returns 1 when even q -> 1 satisfies the budget.
double kl_upper_root(double qhat, double beta) {
    double lo = qhat;
    double hi = 1.0 - 1e-12;
    if (kl_bernoulli(qhat, hi) <= beta) return 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (kl_bernoulli(qhat, mid) <= beta) lo = mid;
        else hi = mid;
    }
    return lo;
}

/// Smallest q <= qhat with KL(qhat || q) <= beta.
double kl_lower_root(double qhat, double beta) {
    double lo = 1e-300;
    double hi = qhat;
    if (kl_bernoulli(qhat, lo) <= beta) return 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (kl_bernoulli(qhat, mid) <= beta) hi = mid;
        else lo = mid;
    }
    return hi;
}

}  // namespace

GainInterval finite_deviation(double successes, double trials, double eps) {
    check_deviation_inputs(successes, trials, eps);
    const double qhat = successes / trials;
    const double half_width = std::sqrt(std::log(2.0 / eps) / (2.0 * trials));
    GainInterval g;
    g.q_low = std::max(0.0, qhat - half_width);
    g.q_up = std::min(1.0, qhat + half_width);
    return g;
}

GainInterval chernoff_deviation(double successes, double trials, double eps) {
    check_deviation_inputs(successes, trials, eps);
    const double qhat = successes / trials;
    const double beta = std::log(2.0 / eps) / trials;
    GainInterval g;
    g.q_low = kl_lower_root(qhat, beta);
    g.q_up = kl_upper_root(qhat, beta);
    return g;
}

GainInterval deviation_interval(DeviationMethod method, double successes,
                                double trials, double eps) {
    return method == DeviationMethod::Hoeffding
               ? finite_deviation(successes, trials, eps)
               : chernoff_deviation(successes, trials, eps);
}

GainMatrix observed_gain_intervals(const ObservedStats& obs,
                                   const ProtocolConfig& config) {
    static constexpr const char* kLabels[3] = {"mu", "nu", "omega"};
    GainMatrix gains;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const SettingEstimate& e = obs.q_z_hat[i][j];
            if (!e.defined || e.trials < 1.0)
                throw std::invalid_argument(
                    std::string("observations.q_z_hat[") + kLabels[i] + "-" +
                    kLabels[j] + "]: no pulses recorded for this setting");
            gains[i][j] = deviation_interval(config.deviation, e.successes,
                                             e.trials, config.eps_est);
        }
    return gains;
}

std::string YieldBounds::to_json() const {
    nlohmann::json j;
    j["n_cut"] = n_cut;
    j["trivial_fallback"] = trivial_fallback;
    j["y_low"] = y_low;
    j["y_up"] = y_up;
    return j.dump(2) + "\n";
}

YieldBounds yield_bounds_lp(const GainMatrix& gains, double mu, double nu,
                            double omega, int n_cut, LPScope scope,
                            const std::vector<std::pair<int, int>>* upper_pairs) {
    if (!(mu > nu && nu > omega && omega >= 0.0))
        throw std::invalid_argument("decoys: require mu > nu > omega >= 0");
    if (n_cut < 2) throw std::invalid_argument("n_cut: must be >= 2");
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const GainInterval& g = gains[a][b];
            if (!(0.0 <= g.q_low && g.q_low <= g.q_up && g.q_up <= 1.0))
                throw std::invalid_argument(
                    "gains: each interval must satisfy 0 <= q_low <= q_up <= 1");
        }

    const int k = n_cut + 1;
    YieldBounds out;
    out.n_cut = n_cut;
    out.y_low.assign(k, std::vector<double>(k, 0.0));
    out.y_up.assign(k, std::vector<double>(k, 1.0));

    // Poisson coefficients per decoy intensity.
    const double decoys[3] = {mu, nu, omega};
    std::vector<std::vector<double>> pn(3, std::vector<double>(k));
    for (int d = 0; d < 3; ++d)
        for (int i = 0; i < k; ++i) pn[d][i] = poisson_pn(i, decoys[d]);

    // Variables: k*k yields (index n*k + m) followed by 9 range slacks.
    const int n_yields = k * k;
    lp::Problem prob;
    prob.m = 9;
    prob.n = n_yields + 9;
    prob.cols.assign(static_cast<std::size_t>(prob.m) * prob.n, 0.0);
    prob.b.assign(9, 0.0);
    prob.lo.assign(prob.n, 0.0);
    prob.up.assign(prob.n, 1.0);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const int row = a * 3 + b;
            double mass = 0.0;
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j) {
                    const double c = pn[a][i] * pn[b][j];
                    prob.at(row, i * k + j) = c;
                    mass += c;
                }
            const double tail = std::max(0.0, 1.0 - mass);
            const int slack = n_yields + row;
            prob.at(row, slack) = -1.0;
            prob.lo[slack] = std::max(0.0, gains[a][b].q_low - tail);
            prob.up[slack] = gains[a][b].q_up;
        }

    lp::Solver solver(std::move(prob));
    std::vector<double> objective(static_cast<std::size_t>(n_yields) + 9, 0.0);

    auto solve_entry = [&](int n, int m, bool maximize) -> bool {
        const int var = n * k + m;
        objective[var] = 1.0;
        const lp::Solution sol =
            maximize ? solver.maximize(objective) : solver.minimize(objective);
        objective[var] = 0.0;
        if (sol.status != lp::Status::Optimal) return false;
        double v = std::clamp(sol.objective, 0.0, 1.0);
        if (maximize) out.y_up[n][m] = v;
        else out.y_low[n][m] = v;
        return true;
    };

    bool ok = true;
    if (scope == LPScope::Full) {
        for (int n = 0; n < k && ok; ++n)
            for (int m = 0; m < k && ok; ++m)
                ok = solve_entry(n, m, true) && solve_entry(n, m, false);
    } else if (upper_pairs != nullptr) {
        for (const auto& [n, m] : *upper_pairs) {
            if (n < 0 || m < 0 || n >= k || m >= k)
                throw std::invalid_argument("upper_pairs: index beyond n_cut");
            ok = solve_entry(n, m, true);
            if (!ok) break;
        }
    } else {
        for (int n = 0; n < k && ok; ++n)
            for (int m = n % 2; m < k && ok; m += 2) ok = solve_entry(n, m, true);
    }

    if (!ok) {
        // Noisy finite data can make the constraint system empty; the sound
        // fallback is the full [0,1] box for every entry.
        out.y_low.assign(k, std::vector<double>(k, 0.0));
        out.y_up.assign(k, std::vector<double>(k, 1.0));
        out.trivial_fallback = true;
    }
    return out;
}

}  // namespace tfqkd
