#include "epf/qrf.hpp"

#include "epf/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epf {

void ForestParams::validate() const {
    if (n_trees == 0) throw ArgumentError("forest: n_trees must be positive");
    if (min_leaf == 0) throw ArgumentError("forest: min_leaf must be positive");
}

std::size_t Tree::leaf_of(std::span<const double> x) const {
    std::size_t node = 0;
    while (!nodes[node].is_leaf()) {
        const auto& n = nodes[node];
        node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return node;
}

double StepCdf::operator()(double y) const {
    const auto it = std::upper_bound(values.begin(), values.end(), y);
    if (it == values.begin()) return 0.0;
    return cumulative[static_cast<std::size_t>(it - values.begin()) - 1];
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

struct Item {
    double x;
    double y;
    std::uint32_t row;
};

class TreeGrower {
public:
    TreeGrower(const RowMatrix& X, std::span<const double> y, const ForestParams& p, std::size_t mtry, Rng& rng)
        : X_(X), y_(y), p_(p), mtry_(mtry), rng_(rng), features_(static_cast<std::size_t>(X.cols())) {}

    Tree grow(std::vector<std::uint32_t> bag) {
        Tree tree;
        tree.nodes.emplace_back();
        struct Pending {
            std::uint32_t node;
            std::uint32_t begin, end;
            std::size_t depth;
        };
        std::vector<Pending> stack{{0, 0, static_cast<std::uint32_t>(bag.size()), 0}};
        while (!stack.empty()) {
            const Pending cur = stack.back();
            stack.pop_back();
            const bool depth_ok = p_.max_depth == 0 || cur.depth < p_.max_depth;
            Split s;
            if (depth_ok && cur.end - cur.begin >= 2 * p_.min_leaf) s = best_split(bag, cur.begin, cur.end);
            if (s.feature < 0) {
                tree.nodes[cur.node].leaf_begin = cur.begin;
                tree.nodes[cur.node].leaf_end = cur.end;
                continue;
            }
            const auto f = static_cast<Eigen::Index>(s.feature);
            const auto mid_it = std::stable_partition(bag.begin() + cur.begin, bag.begin() + cur.end,
                                                      [&](std::uint32_t r) { return X_(r, f) <= s.threshold; });
            const auto mid = static_cast<std::uint32_t>(mid_it - bag.begin());
            const auto left = static_cast<std::uint32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& node = tree.nodes[cur.node];
            node.feature = s.feature;
            node.threshold = s.threshold;
            node.left = left;
            node.right = left + 1;
            stack.push_back({left + 1, mid, cur.end, cur.depth + 1});
            stack.push_back({left, cur.begin, mid, cur.depth + 1});
        }
        tree.leaf_rows = std::move(bag);
        return tree;
    }

private:
    void sample_features() {
        std::iota(features_.begin(), features_.end(), 0);
        const std::size_t m = features_.size();
        for (std::size_t i = 0; i < mtry_; ++i) {
            const auto j = i + static_cast<std::size_t>(rng_.index(m - i));
            std::swap(features_[i], features_[j]);
        }
        std::sort(features_.begin(), features_.begin() + static_cast<long>(mtry_));
    }

    Split best_split(const std::vector<std::uint32_t>& bag, std::uint32_t begin, std::uint32_t end) {
        const std::size_t len = end - begin;
        double mean = 0.0;
        for (std::uint32_t k = begin; k < end; ++k) mean += y_[bag[k]];
        mean /= static_cast<double>(len);
        double sse = 0.0;
        for (std::uint32_t k = begin; k < end; ++k) sse += (y_[bag[k]] - mean) * (y_[bag[k]] - mean);

        sample_features();
        Split best;
        if (!(sse > 0.0)) return best;
        best.gain = 1e-12 * sse;
        items_.resize(len);
        for (std::size_t fi = 0; fi < mtry_; ++fi) {
            const auto f = static_cast<Eigen::Index>(features_[fi]);
            double total = 0.0;
            for (std::size_t k = 0; k < len; ++k) {
                const auto r = bag[begin + k];
                items_[k] = {X_(r, f), y_[r] - mean, r};
                total += items_[k].y;
            }
            std::sort(items_.begin(), items_.end(), [](const Item& a, const Item& b) {
                return a.x < b.x || (a.x == b.x && a.row < b.row);
            });
            double left_sum = 0.0;
            for (std::size_t k = 1; k < len; ++k) {
                left_sum += items_[k - 1].y;
                if (items_[k - 1].x == items_[k].x) continue;
                const std::size_t nl = k, nr = len - k;
                if (nl < p_.min_leaf || nr < p_.min_leaf) continue;
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(nl) +
                                    right_sum * right_sum / static_cast<double>(nr) -
                                    total * total / static_cast<double>(len);
                if (gain > best.gain + 1e-12 * std::max(std::abs(best.gain), std::abs(gain))) {
                    const double lo = items_[k - 1].x, hi = items_[k].x;
                    double thr = lo + (hi - lo) / 2.0;
                    if (!(thr < hi)) thr = lo;
                    best = {static_cast<int>(f), thr, gain};
                }
            }
        }
        return best;
    }

    const RowMatrix& X_;
    std::span<const double> y_;
    const ForestParams& p_;
    std::size_t mtry_;
    Rng& rng_;
    std::vector<std::size_t> features_;
    std::vector<Item> items_;
};

struct WeightedRank {
    std::uint32_t rank;
    double weight;
};

std::vector<WeightedRank> leaf_weights(const Forest& forest, std::span<const double> x) {
    if (x.size() != forest.n_features) {
        throw ArgumentError("forest: query has " + std::to_string(x.size()) + " features, forest expects " +
                            std::to_string(forest.n_features));
    }
    std::vector<WeightedRank> out;
    const double per_tree = 1.0 / static_cast<double>(forest.trees.size());
    for (const auto& tree : forest.trees) {
        const auto members = tree.members(tree.leaf_of(x));
        const double w = per_tree / static_cast<double>(members.size());
        for (auto r : members) out.push_back({forest.rank[r], w});
    }
    std::sort(out.begin(), out.end(), [](const WeightedRank& a, const WeightedRank& b) { return a.rank < b.rank; });
    return out;
}

}  // namespace

Forest fit_forest(const RowMatrix& X, std::span<const double> y, const ForestParams& params, std::uint64_t seed) {
    params.validate();
    const auto n = static_cast<std::size_t>(X.rows());
    if (n != y.size()) throw ArgumentError("fit_forest: X and y row counts differ");
    if (n < params.min_leaf || n == 0) throw ArgumentError("fit_forest: fewer rows than min_leaf");
    if (!X.allFinite()) throw ArgumentError("fit_forest: design matrix has non-finite entries");
    for (double v : y) {
        if (!std::isfinite(v)) throw ArgumentError("fit_forest: target has non-finite entries");
    }

    Forest forest;
    forest.params = params;
    forest.n_features = static_cast<std::size_t>(X.cols());
    forest.targets.assign(y.begin(), y.end());
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return y[a] < y[b]; });
    forest.rank.resize(n);
    for (std::size_t k = 0; k < n; ++k) forest.rank[order[k]] = static_cast<std::uint32_t>(k);
    forest.order = std::move(order);

    const std::size_t m = forest.n_features;
    std::size_t mtry = params.mtry == 0 ? (m + 2) / 3 : params.mtry;
    mtry = std::clamp<std::size_t>(mtry, m == 0 ? 0 : 1, m);

    forest.trees.reserve(params.n_trees);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        Rng rng(mix_seed(seed, t));
        std::vector<std::uint32_t> bag(n);
        if (params.bootstrap) {
            for (auto& b : bag) b = static_cast<std::uint32_t>(rng.index(n));
            std::sort(bag.begin(), bag.end());
        } else {
            std::iota(bag.begin(), bag.end(), 0u);
        }
        TreeGrower grower(X, y, params, mtry, rng);
        forest.trees.push_back(grower.grow(std::move(bag)));
    }
    return forest;
}

std::vector<double> forest_weights(const Forest& forest, std::span<const double> x) {
    if (x.size() != forest.n_features) throw ArgumentError("forest: query width mismatch");
    std::vector<double> w(forest.targets.size(), 0.0);
    const double per_tree = 1.0 / static_cast<double>(forest.trees.size());
    for (const auto& tree : forest.trees) {
        const auto members = tree.members(tree.leaf_of(x));
        const double share = per_tree / static_cast<double>(members.size());
        for (auto r : members) w[r] += share;
    }
    return w;
}

StepCdf conditional_cdf(const Forest& forest, std::span<const double> x) {
    const auto weights = leaf_weights(forest, x);
    const auto& by_rank = forest.order;
    StepCdf cdf;
    double acc = 0.0;
    std::size_t k = 0;
    for (std::size_t r = 0; r < by_rank.size(); ++r) {
        while (k < weights.size() && weights[k].rank == r) acc += weights[k++].weight;
        const double v = forest.targets[by_rank[r]];
        if (!cdf.values.empty() && cdf.values.back() == v) {
            cdf.cumulative.back() = acc;
        } else {
            cdf.values.push_back(v);
            cdf.cumulative.push_back(acc);
        }
    }
    return cdf;
}

std::vector<double> predict_quantiles(const Forest& forest, std::span<const double> x, std::span<const double> levels) {
    const auto weights = leaf_weights(forest, x);
    std::vector<double> out(levels.size());
    double acc = 0.0;
    std::size_t k = 0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const double q = levels[l];
        if (!(q > 0.0 && q < 1.0)) throw ArgumentError("predict_quantile: level must lie in (0,1)");
        if (l > 0 && q < levels[l - 1]) throw ArgumentError("predict_quantiles: levels must be ascending");
        while (k < weights.size() && acc < q - 1e-12) {
            // Consume every entry sharing this rank before testing again.
            const auto r = weights[k].rank;
            while (k < weights.size() && weights[k].rank == r) acc += weights[k++].weight;
        }
        out[l] = forest.targets[forest.order[weights[k == 0 ? 0 : k - 1].rank]];
    }
    return out;
}

double predict_quantile(const Forest& forest, std::span<const double> x, double q) {
    const double level[1] = {q};
    return predict_quantiles(forest, x, level)[0];
}

}  // namespace epf
