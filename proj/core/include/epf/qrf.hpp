#pragma once

#include "epf/linear_qr.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace epf {

struct ForestParams {
    std::size_t n_trees = 200;
    /// Features tried per split; 0 means ceil(m/3).
    std::size_t mtry = 0;
    std::size_t min_leaf = 5;
    /// 0 means unlimited depth.
    std::size_t max_depth = 0;
    bool bootstrap = true;

    void validate() const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t leaf_begin = 0;  // leaf: range into Tree::leaf_rows
    std::uint32_t leaf_end = 0;

    [[nodiscard]] bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;
    /// Training rows grouped by leaf, repeated according to their bootstrap count.
    std::vector<std::uint32_t> leaf_rows;

    /// Index of the leaf node reached by `x` (go left when x[f] <= threshold).
    [[nodiscard]] std::size_t leaf_of(std::span<const double> x) const;
    [[nodiscard]] std::span<const std::uint32_t> members(std::size_t leaf) const {
        return {leaf_rows.data() + nodes[leaf].leaf_begin, nodes[leaf].leaf_end - nodes[leaf].leaf_begin};
    }
};

struct Forest {
    std::vector<Tree> trees;
    std::vector<double> targets;
    std::vector<std::uint32_t> rank;   // position of each training row in ascending target order
    std::vector<std::uint32_t> order;  // inverse of `rank`
    std::size_t n_features = 0;
    ForestParams params;
};

/// Grows params.n_trees CART regression trees. Splits maximize the reduction in
/// within-node squared deviation over a random feature subset; ties keep the lowest
/// feature index, then the lowest threshold. Thresholds are midpoints between
/// adjacent distinct values.
Forest fit_forest(const RowMatrix& X, std::span<const double> y, const ForestParams& params, std::uint64_t seed);

/// Per-training-row weights for a query; they sum to one.
std::vector<double> forest_weights(const Forest& forest, std::span<const double> x);

/// Right-continuous step CDF at the distinct training targets.
struct StepCdf {
    std::vector<double> values;
    std::vector<double> cumulative;

    [[nodiscard]] double operator()(double y) const;
};

StepCdf conditional_cdf(const Forest& forest, std::span<const double> x);

/// Smallest training target v with F(v) >= q.
double predict_quantile(const Forest& forest, std::span<const double> x, double q);

/// Several levels from one weight pass; `levels` must be ascending.
std::vector<double> predict_quantiles(const Forest& forest, std::span<const double> x, std::span<const double> levels);

}  // namespace epf
