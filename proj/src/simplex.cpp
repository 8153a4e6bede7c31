#include "tfqkd/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tfqkd::lp {

namespace {
constexpr double kFeasTol = 1e-9;
constexpr double kOptTol = 1e-9;
constexpr double kPivotTol = 1e-10;
constexpr double kArtificialCap = 1e30;
constexpr int kMaxIterations = 5000;
constexpr int kStallLimit = 32;  // degenerate pivots before switching to Bland's rule
}  // namespace

Solver::Solver(Problem problem) : p_(std::move(problem)), n_real_(p_.n) {
    if (p_.m <= 0 || p_.n <= 0 || static_cast<int>(p_.b.size()) != p_.m ||
        static_cast<int>(p_.lo.size()) != p_.n ||
        static_cast<int>(p_.up.size()) != p_.n ||
        p_.cols.size() != static_cast<std::size_t>(p_.m) * p_.n)
        throw std::invalid_argument("lp::Solver: inconsistent problem dimensions");
    for (int j = 0; j < p_.n; ++j)
        if (!(p_.lo[j] <= p_.up[j]))
            throw std::invalid_argument("lp::Solver: lower bound above upper bound");

    // Append one artificial column per row; they form the initial basis.
    p_.cols.resize(static_cast<std::size_t>(p_.m) * (p_.n + p_.m), 0.0);
    basis_.resize(p_.m);
    mark_.assign(static_cast<std::size_t>(p_.n + p_.m), Mark::AtLower);
    x_.assign(static_cast<std::size_t>(p_.n + p_.m), 0.0);
    for (int j = 0; j < p_.n; ++j) x_[j] = p_.lo[j];

    // Residual of the all-at-lower-bound point decides each artificial's sign.
    std::vector<double> residual = p_.b;
    for (int j = 0; j < p_.n; ++j) {
        const double v = x_[j];
        if (v == 0.0) continue;
        for (int i = 0; i < p_.m; ++i) residual[i] -= p_.at(i, j) * v;
    }
    for (int i = 0; i < p_.m; ++i) {
        const int col = p_.n + i;
        p_.cols[static_cast<std::size_t>(col) * p_.m + i] = residual[i] >= 0.0 ? 1.0 : -1.0;
        p_.lo.push_back(0.0);
        p_.up.push_back(kArtificialCap);
        basis_[i] = col;
        mark_[col] = Mark::Basic;
        x_[col] = std::fabs(residual[i]);
    }
    p_.n += p_.m;
    lu_.assign(static_cast<std::size_t>(p_.m) * p_.m, 0.0);
    perm_.assign(p_.m, 0);
    scratch_.assign(p_.m, 0.0);
}

void Solver::lu_factor() {
    const int m = p_.m;
    for (int i = 0; i < m; ++i) {
        perm_[i] = i;
        for (int j = 0; j < m; ++j) lu_[i * m + j] = p_.at(i, basis_[j]);
    }
    lu_ok_ = true;
    for (int k = 0; k < m; ++k) {
        int piv = k;
        double best = std::fabs(lu_[k * m + k]);
        for (int i = k + 1; i < m; ++i) {
            const double v = std::fabs(lu_[i * m + k]);
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best < 1e-13) {
            lu_ok_ = false;
            return;
        }
        if (piv != k) {
            for (int j = 0; j < m; ++j) std::swap(lu_[k * m + j], lu_[piv * m + j]);
            std::swap(perm_[k], perm_[piv]);
        }
        const double d = lu_[k * m + k];
        for (int i = k + 1; i < m; ++i) {
            const double f = lu_[i * m + k] / d;
            lu_[i * m + k] = f;
            for (int j = k + 1; j < m; ++j) lu_[i * m + j] -= f * lu_[k * m + j];
        }
    }
}

void Solver::lu_solve(std::vector<double>& rhs) const {
    const int m = p_.m;
    std::vector<double>& z = scratch_;
    for (int i = 0; i < m; ++i) z[i] = rhs[perm_[i]];
    for (int i = 1; i < m; ++i)
        for (int j = 0; j < i; ++j) z[i] -= lu_[i * m + j] * z[j];
    for (int i = m - 1; i >= 0; --i) {
        for (int j = i + 1; j < m; ++j) z[i] -= lu_[i * m + j] * z[j];
        z[i] /= lu_[i * m + i];
    }
    std::copy(z.begin(), z.end(), rhs.begin());
}

void Solver::lu_solve_transposed(std::vector<double>& rhs) const {
    const int m = p_.m;
    std::vector<double>& w = scratch_;
    // U^T w = rhs (forward, non-unit diagonal)
    for (int i = 0; i < m; ++i) {
        double v = rhs[i];
        for (int j = 0; j < i; ++j) v -= lu_[j * m + i] * w[j];
        w[i] = v / lu_[i * m + i];
    }
    // L^T v = w (backward, unit diagonal)
    for (int i = m - 1; i >= 0; --i)
        for (int j = i + 1; j < m; ++j) w[i] -= lu_[j * m + i] * w[j];
    // undo row permutation
    for (int i = 0; i < m; ++i) rhs[perm_[i]] = w[i];
}

bool Solver::factorize_and_compute_x() {
    lu_factor();
    if (!lu_ok_) return false;
    std::vector<double> rhs = p_.b;
    for (int j = 0; j < p_.n; ++j) {
        if (mark_[j] == Mark::Basic) continue;
        const double v = (mark_[j] == Mark::AtLower) ? p_.lo[j] : p_.up[j];
        x_[j] = v;
        if (v == 0.0) continue;
        for (int i = 0; i < p_.m; ++i) rhs[i] -= p_.at(i, j) * v;
    }
    lu_solve(rhs);
    for (int i = 0; i < p_.m; ++i) x_[basis_[i]] = rhs[i];
    return true;
}

Status Solver::run_simplex(const std::vector<double>& c, bool phase_one) {
    const int m = p_.m;
    const int n = p_.n;
    std::vector<double> y(m), w(m);
    int stall = 0;
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        if (!factorize_and_compute_x()) return Status::Failed;

        // Pricing: y = B^-T c_B, reduced costs for nonbasic columns.
        for (int i = 0; i < m; ++i) y[i] = c[basis_[i]];
        lu_solve_transposed(y);
        const bool bland = stall >= kStallLimit;
        int entering = -1;
        double best_violation = kOptTol;
        for (int j = 0; j < n; ++j) {
            if (mark_[j] == Mark::Basic) continue;
            if (p_.up[j] - p_.lo[j] <= 0.0) continue;  // fixed variable
            double d = c[j];
            for (int i = 0; i < m; ++i) d -= y[i] * p_.at(i, j);
            double violation = 0.0;
            if (mark_[j] == Mark::AtLower && d < -kOptTol) violation = -d;
            else if (mark_[j] == Mark::AtUpper && d > kOptTol) violation = d;
            else continue;
            if (bland) {
                entering = j;
                break;
            }
            if (violation > best_violation) {
                best_violation = violation;
                entering = j;
            }
        }
        if (entering < 0) return Status::Optimal;  // no improving column

        // Direction of basic variables as the entering variable moves by +t
        // from its bound (sign s when leaving an upper bound).
        const double s = (mark_[entering] == Mark::AtLower) ? 1.0 : -1.0;
        for (int i = 0; i < m; ++i) w[i] = p_.at(i, entering);
        lu_solve(w);

        double t_limit = p_.up[entering] - p_.lo[entering];  // bound flip distance
        int leaving = -1;                                    // -1 means bound flip
        for (int i = 0; i < m; ++i) {
            const double g = s * w[i];
            const int bj = basis_[i];
            double t_i;
            if (g > kPivotTol) t_i = (x_[bj] - p_.lo[bj]) / g;
            else if (g < -kPivotTol) t_i = (x_[bj] - p_.up[bj]) / g;
            else continue;
            if (t_i < 0.0) t_i = 0.0;  // numerical: already at (or past) bound
            if (t_i < t_limit - 1e-15 ||
                (leaving >= 0 && t_i <= t_limit + 1e-15 && bland && bj < basis_[leaving])) {
                t_limit = t_i;
                leaving = i;
            }
        }
        if (t_limit >= kArtificialCap) return Status::Failed;  // unbounded: corrupt input

        if (t_limit <= kFeasTol) ++stall;
        else stall = 0;

        if (leaving < 0) {
            // The entering variable runs all the way to its opposite bound.
            mark_[entering] =
                (mark_[entering] == Mark::AtLower) ? Mark::AtUpper : Mark::AtLower;
        } else {
            const int out = basis_[leaving];
            const double g = s * w[leaving];
            mark_[out] = (g > 0.0) ? Mark::AtLower : Mark::AtUpper;
            basis_[leaving] = entering;
            mark_[entering] = Mark::Basic;
            x_[entering] =
                ((s > 0.0) ? p_.lo[entering] : p_.up[entering]) + s * t_limit;
        }
        // x_ is fully recomputed from the basis at the top of the next pass.
        (void)phase_one;
    }
    return Status::Failed;
}

Solution Solver::minimize(const std::vector<double>& c) {
    if (static_cast<int>(c.size()) != n_real_)
        throw std::invalid_argument("lp::Solver::minimize: objective size mismatch");
    std::vector<double> cost(static_cast<std::size_t>(p_.n), 0.0);

    if (!feasible_) {
        for (int j = n_real_; j < p_.n; ++j) cost[j] = 1.0;
        const Status s1 = run_simplex(cost, true);
        if (s1 == Status::Failed) return {Status::Failed, 0.0, {}};
        double infeas = 0.0;
        for (int j = n_real_; j < p_.n; ++j) infeas += x_[j];
        if (!(infeas <= 1e-9)) return {Status::Infeasible, 0.0, {}};
        for (int j = n_real_; j < p_.n; ++j) p_.up[j] = 0.0;  // retire artificials
        feasible_ = true;
        std::fill(cost.begin(), cost.end(), 0.0);
    }

    std::copy(c.begin(), c.end(), cost.begin());
    const Status s2 = run_simplex(cost, false);
    if (s2 != Status::Optimal) return {s2 == Status::Infeasible ? Status::Infeasible
                                                                : Status::Failed,
                                       0.0,
                                       {}};
    Solution sol;
    sol.status = Status::Optimal;
    sol.x.assign(x_.begin(), x_.begin() + n_real_);
    sol.objective = 0.0;
    for (int j = 0; j < n_real_; ++j) sol.objective += c[j] * sol.x[j];
    return sol;
}

Solution Solver::maximize(const std::vector<double>& c) {
    std::vector<double> neg(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) neg[i] = -c[i];
    Solution sol = minimize(neg);
    sol.objective = -sol.objective;
    return sol;
}

}  // namespace tfqkd::lp
