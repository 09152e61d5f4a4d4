#pragma once

#include "epf/simplex.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace epf::milp {

/// An LP with a subset of columns restricted to integer values.
struct Problem {
    lp::Problem lp;
    std::vector<Eigen::Index> integer_columns;
};

enum class Status {
    optimal,      // incumbent proven within the gap tolerance
    infeasible,
    gap_limit,    // stopped at a node or time limit with an incumbent; gap reported
    unknown,      // stopped at a limit without an incumbent
};

const char* to_string(Status s);

struct Options {
    /// Relative gap (incumbent - bound) / max(1, |incumbent|) at which the search stops.
    double gap_tol = 1e-6;
    double integrality_tol = 1e-6;
    double time_limit_seconds = 60.0;
    std::size_t node_limit = 1'000'000;
    /// Try rounding the relaxation at every node whose depth is a multiple of this.
    std::size_t rounding_frequency = 1;
    /// Maps a relaxation solution to a full integer assignment (one value per integer
    /// column). Defaults to rounding each column to the nearest integer.
    std::function<std::vector<double>(const Eigen::VectorXd&)> propose_assignment;
    lp::Options lp;
};

struct Result {
    Status status = Status::unknown;
    Eigen::VectorXd x;
    double objective = lp::kInf;
    double bound = -lp::kInf;
    double gap = lp::kInf;
    std::size_t nodes = 0;
};

/// Branch and bound over LP relaxations: best-bound node selection with a
/// depth-first plunge until the first incumbent, branching on the most fractional
/// integer column (lowest index on ties). Incumbents are re-solved with their integer
/// columns fixed so continuous values are exact for that assignment.
Result solve(const Problem& problem, const Options& options = {});

}  // namespace epf::milp
