#include "epf/milp.hpp"

#include "epf/common.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <queue>

namespace epf::milp {

const char* to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::gap_limit: return "gap_limit";
        case Status::unknown: return "unknown";
    }
    return "?";
}

namespace {

struct Node {
    std::vector<double> lower;  // bounds of the integer columns only
    std::vector<double> upper;
    double bound = -lp::kInf;
    std::size_t depth = 0;
    std::size_t id = 0;
};

struct WorseBound {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

}  // namespace

Result solve(const Problem& problem, const Options& options) {
    const auto start = std::chrono::steady_clock::now();
    const auto& cols = problem.integer_columns;
    const std::size_t k = cols.size();
    lp::Problem work = problem.lp;

    Result res;
    auto pruned = [&](double bound) {
        return std::isfinite(res.objective) &&
               bound >= res.objective - options.gap_tol * std::max(1.0, std::abs(res.objective));
    };

    auto relax = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
        for (std::size_t i = 0; i < k; ++i) {
            work.lower[cols[i]] = lo[i];
            work.upper[cols[i]] = hi[i];
        }
        auto r = lp::solve(work, options.lp);
        if (r.status == lp::Status::iteration_limit) {
            throw SolverError("branch and bound: LP relaxation hit the iteration limit");
        }
        return r;
    };

    auto try_assignment = [&](const Eigen::VectorXd& x) {
        std::vector<double> fixed(k);
        if (options.propose_assignment) {
            fixed = options.propose_assignment(x);
            if (fixed.size() != k) throw ArgumentError("branch and bound: proposed assignment has the wrong length");
        } else {
            for (std::size_t i = 0; i < k; ++i) fixed[i] = std::round(x[cols[i]]);
        }
        const auto r = relax(fixed, fixed);
        if (r.status != lp::Status::optimal || !(r.objective < res.objective)) return;
        res.objective = r.objective;
        res.x = r.x;
        for (std::size_t i = 0; i < k; ++i) res.x[cols[i]] = fixed[i];
    };

    Node root;
    root.lower.resize(k);
    root.upper.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        root.lower[i] = std::ceil(problem.lp.lower[cols[i]]);
        root.upper[i] = std::floor(problem.lp.upper[cols[i]]);
    }

    std::priority_queue<Node, std::vector<Node>, WorseBound> open;
    std::optional<Node> dive = std::move(root);
    std::size_t next_id = 1;
    bool limit_hit = false;

    while (dive || !open.empty()) {
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (res.nodes >= options.node_limit || elapsed > options.time_limit_seconds) {
            limit_hit = true;
            break;
        }
        Node node;
        if (dive) {
            node = std::move(*dive);
            dive.reset();
        } else {
            node = open.top();
            open.pop();
        }
        if (pruned(node.bound)) continue;

        ++res.nodes;
        bool empty_box = false;
        for (std::size_t i = 0; i < k; ++i) empty_box = empty_box || node.lower[i] > node.upper[i];
        if (empty_box) continue;
        const auto r = relax(node.lower, node.upper);
        if (r.status != lp::Status::optimal) continue;  // infeasible or unbounded subproblem
        if (pruned(r.objective)) continue;

        // Most fractional integer column.
        std::size_t branch = k;
        double best_frac = options.integrality_tol;
        for (std::size_t i = 0; i < k; ++i) {
            const double v = r.x[cols[i]];
            const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
            if (frac > best_frac) {
                best_frac = frac;
                branch = i;
            }
        }
        if (branch == k) {
            try_assignment(r.x);
            continue;
        }
        if (options.rounding_frequency > 0 && node.depth % options.rounding_frequency == 0) try_assignment(r.x);

        const double v = r.x[cols[branch]];
        Node down = node, up = node;
        down.upper[branch] = std::floor(v);
        up.lower[branch] = std::ceil(v);
        down.bound = up.bound = r.objective;
        down.depth = up.depth = node.depth + 1;
        down.id = next_id++;
        up.id = next_id++;
        const bool up_first = v - std::floor(v) >= 0.5;
        if (std::isinf(res.objective)) {
            // Plunge toward the rounded side until an incumbent exists.
            dive = up_first ? std::move(up) : std::move(down);
            open.push(up_first ? std::move(down) : std::move(up));
        } else {
            open.push(std::move(down));
            open.push(std::move(up));
        }
    }

    double bound = res.objective;
    if (dive) bound = std::min(bound, dive->bound);
    if (!open.empty()) bound = std::min(bound, open.top().bound);
    res.bound = bound;

    if (std::isinf(res.objective)) {
        res.status = limit_hit ? Status::unknown : Status::infeasible;
        return res;
    }
    res.gap = (res.objective - res.bound) / std::max(1.0, std::abs(res.objective));
    res.status = (!limit_hit || res.gap <= options.gap_tol) ? Status::optimal : Status::gap_limit;
    if (!limit_hit) res.gap = std::max(0.0, res.gap);
    return res;
}

}  // namespace epf::milp
