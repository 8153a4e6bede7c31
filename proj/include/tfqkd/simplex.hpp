#pragma once

#include <vector>

namespace tfqkd::lp {

/// Linear program in the form
///     optimize c.x   subject to   A x = b,   lo <= x <= up,
/// with all bounds finite. Range ("two-sided") constraints are expressed by
/// the caller via explicit slack variables with the appropriate bounds.
struct Problem {
    int m = 0;                 ///< number of equality rows
    int n = 0;                 ///< number of structural variables
    std::vector<double> cols;  ///< column-major m*n coefficient matrix
    std::vector<double> b;     ///< right-hand side, length m
    std::vector<double> lo;    ///< lower bounds, length n
    std::vector<double> up;    ///< upper bounds, length n

    double& at(int row, int col) { return cols[static_cast<std::size_t>(col) * m + row]; }
    double at(int row, int col) const {
        return cols[static_cast<std::size_t>(col) * m + row];
    }
};

enum class Status { Optimal, Infeasible, Failed };

struct Solution {
    Status status = Status::Failed;
    double objective = 0.0;
    std::vector<double> x;  ///< length n, valid when status == Optimal
};

/// Dense bounded-variable simplex, two-phase, with an anti-cycling fallback.
/// The feasible basis found by the first call is retained, so subsequent
/// solves over different objectives of the same problem warm-start directly
/// in phase 2. Deterministic: no randomization anywhere.
class Solver {
  public:
    explicit Solver(Problem problem);

    Solution minimize(const std::vector<double>& c);
    Solution maximize(const std::vector<double>& c);

  private:
    enum class Mark : unsigned char { AtLower, AtUpper, Basic };

    Problem p_;             // problem with artificial columns appended
    int n_real_;            // structural variable count (excludes artificials)
    std::vector<int> basis_;
    std::vector<Mark> mark_;
    std::vector<double> x_;
    bool feasible_ = false;

    bool factorize_and_compute_x();
    Status run_simplex(const std::vector<double>& c, bool phase_one);

    // scratch LU of the current basis matrix
    std::vector<double> lu_;
    std::vector<int> perm_;
    mutable std::vector<double> scratch_;
    bool lu_ok_ = false;
    void lu_factor();
    void lu_solve(std::vector<double>& rhs) const;
    void lu_solve_transposed(std::vector<double>& rhs) const;
};

}  // namespace tfqkd::lp
