#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <vector>

namespace epf::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// min c'x  s.t.  A x = b,  lower <= x <= upper  (bounds may be infinite).
struct Problem {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(Status s);

struct Options {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-11;
    /// Pivots smaller than this fraction of the largest entry in the column are rejected.
    double relative_pivot_tol = 1e-9;
    std::size_t max_iterations = 2'000'000;
    /// Consecutive degenerate pivots after which pricing falls back to Bland's rule.
    std::size_t degenerate_limit = 50;
    std::size_t refactor_interval = 64;
};

struct Result {
    Status status = Status::iteration_limit;
    Eigen::VectorXd x;
    double objective = 0.0;
    /// Row duals: reduced cost of column j is c_j - A_j' duals.
    Eigen::VectorXd duals;
    std::size_t iterations = 0;
    /// Set when some equality rows are linearly dependent; those rows keep a zero artificial in the basis.
    bool redundant_rows = false;
};

/// Bounded-variable revised simplex with a two-phase start. `start_at_upper`, when
/// non-empty, selects the initial bound of each column with two finite bounds.
/// Throws SolverError when a refactorization finds a singular basis.
Result solve(const Problem& problem, const Options& options = {}, const std::vector<bool>& start_at_upper = {});

}  // namespace epf::lp
