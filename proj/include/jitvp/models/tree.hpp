#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "jitvp/jsonl.hpp"
#include "jitvp/rng.hpp"

namespace jitvp {

// CART classification tree, Gini impurity, continuous features only.
struct TreeNode {
    int feature = -1;  // -1: leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf: positive-class fraction
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    double predict(const std::vector<double>& x) const {
        int at = 0;
        while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
            const TreeNode& node = nodes[static_cast<std::size_t>(at)];
            at = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                             : node.right;
        }
        return nodes[static_cast<std::size_t>(at)].value;
    }
};

struct TreeConfig {
    int max_depth = -1;            // -1: unbounded
    std::size_t min_samples_split = 2;
    int mtry = -1;                 // features tried per split; -1: all
};

namespace detail {

struct TreeBuilder {
    const std::vector<std::vector<double>>& X;  // row-major samples
    const std::vector<int>& y;
    TreeConfig config;
    Rng& rng;
    DecisionTree tree;

    int build(std::vector<std::size_t>& samples, int depth) {
        std::size_t positives = 0;
        for (std::size_t i : samples) positives += y[i] == 1 ? 1u : 0u;
        const std::size_t n = samples.size();

        auto make_leaf = [&] {
            tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1,
                                          n ? static_cast<double>(positives) / static_cast<double>(n)
                                            : 0.0});
            return static_cast<int>(tree.nodes.size()) - 1;
        };

        if (positives == 0 || positives == n || n < config.min_samples_split ||
            (config.max_depth >= 0 && depth >= config.max_depth))
            return make_leaf();

        const std::size_t dim = X[0].size();
        std::vector<std::size_t> features(dim);
        for (std::size_t f = 0; f < dim; ++f) features[f] = f;
        if (config.mtry > 0 && static_cast<std::size_t>(config.mtry) < dim) {
            // Partial Fisher-Yates; chosen set sorted for a stable scan order.
            for (std::size_t k = 0; k < static_cast<std::size_t>(config.mtry); ++k) {
                std::size_t j = k + rng.next_below(dim - k);
                std::swap(features[k], features[j]);
            }
            features.resize(static_cast<std::size_t>(config.mtry));
            std::sort(features.begin(), features.end());
        }

        const double parent_gini = gini(positives, n);
        double best_gain = 0.0;
        std::size_t best_feature = 0;
        double best_threshold = 0.0;
        bool found = false;

        std::vector<std::pair<double, int>> column(n);
        for (std::size_t f : features) {
            for (std::size_t k = 0; k < n; ++k)
                column[k] = {X[samples[k]][f], y[samples[k]]};
            std::sort(column.begin(), column.end());
            std::size_t left_n = 0, left_pos = 0;
            for (std::size_t k = 0; k + 1 < n;) {
                std::size_t j = k;
                while (j < n && column[j].first == column[k].first) {
                    left_n += 1;
                    left_pos += column[j].second == 1 ? 1u : 0u;
                    ++j;
                }
                if (j >= n) break;
                const std::size_t right_n = n - left_n;
                const std::size_t right_pos = positives - left_pos;
                const double weighted =
                    (static_cast<double>(left_n) * gini(left_pos, left_n) +
                     static_cast<double>(right_n) * gini(right_pos, right_n)) /
                    static_cast<double>(n);
                const double gain = parent_gini - weighted;
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = (column[j - 1].first + column[j].first) / 2.0;
                    found = true;
                }
                k = j;
            }
        }
        if (!found) return make_leaf();

        std::vector<std::size_t> left_samples, right_samples;
        for (std::size_t i : samples)
            (X[i][best_feature] <= best_threshold ? left_samples : right_samples).push_back(i);
        if (left_samples.empty() || right_samples.empty()) return make_leaf();

        tree.nodes.push_back(TreeNode{static_cast<int>(best_feature), best_threshold, -1, -1, 0.0});
        const int node_index = static_cast<int>(tree.nodes.size()) - 1;
        const int left = build(left_samples, depth + 1);
        const int right = build(right_samples, depth + 1);
        tree.nodes[static_cast<std::size_t>(node_index)].left = left;
        tree.nodes[static_cast<std::size_t>(node_index)].right = right;
        return node_index;
    }

    static double gini(std::size_t positives, std::size_t n) {
        if (n == 0) return 0.0;
        const double p = static_cast<double>(positives) / static_cast<double>(n);
        return 2.0 * p * (1.0 - p);
    }
};

}  // namespace detail

// Fits one tree on the given sample indices. Deterministic for a fixed rng
// state; the rng only drives per-split feature subsampling.
inline DecisionTree fit_tree(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                             std::vector<std::size_t> samples, const TreeConfig& config,
                             Rng& rng) {
    detail::TreeBuilder builder{X, y, config, rng, {}};
    if (samples.empty()) {
        builder.tree.nodes.push_back(TreeNode{-1, 0.0, -1, -1, 0.0});
    } else {
        builder.build(samples, 0);  // parents precede children: root is node 0
    }
    return std::move(builder.tree);
}

struct RandomForest {
    std::vector<DecisionTree> trees;

    double predict(const std::vector<double>& x) const {
        if (trees.empty()) return 0.0;
        double sum = 0;
        for (const auto& tree : trees) sum += tree.predict(x);
        return sum / static_cast<double>(trees.size());
    }
};

// Bagging with per-tree bootstrap resamples and sqrt-mtry feature subsampling.
inline RandomForest fit_forest(const std::vector<std::vector<double>>& X,
                               const std::vector<int>& y,
                               const std::vector<std::size_t>& samples, std::size_t n_trees,
                               TreeConfig config, std::uint64_t seed) {
    if (config.mtry == -1 && !X.empty())
        config.mtry = std::max(1, static_cast<int>(std::floor(std::sqrt(
                                      static_cast<double>(X[0].size())))));
    RandomForest forest;
    forest.trees.reserve(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        Rng rng(Rng::mix(seed, t));
        std::vector<std::size_t> bootstrap(samples.size());
        for (auto& pick : bootstrap) pick = samples[rng.next_below(samples.size())];
        forest.trees.push_back(fit_tree(X, y, std::move(bootstrap), config, rng));
    }
    return forest;
}

// Two-layer ensemble: the outer layer bags class-rebalanced bootstraps
// (majority undersampled to 1:1), each inner layer is a random forest; the
// final score is the mean forest score.
struct TlelModel {
    std::vector<RandomForest> forests;

    double predict(const std::vector<double>& x) const {
        if (forests.empty()) return 0.0;
        double sum = 0;
        for (const auto& forest : forests) sum += forest.predict(x);
        return sum / static_cast<double>(forests.size());
    }
};

inline TlelModel fit_tlel(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                          std::size_t outer_bags, std::size_t inner_trees, std::uint64_t seed) {
    std::vector<std::size_t> minority, majority;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] == 1 ? minority : majority).push_back(i);
    if (minority.size() > majority.size()) std::swap(minority, majority);

    TlelModel model;
    model.forests.reserve(outer_bags);
    for (std::size_t o = 0; o < outer_bags; ++o) {
        Rng rng(Rng::mix(seed ^ 0x71e1ULL, o));
        std::vector<std::size_t> pool = majority;
        std::size_t take = std::min(minority.size(), pool.size());
        for (std::size_t k = 0; k < take; ++k) {
            std::size_t j = k + rng.next_below(pool.size() - k);
            std::swap(pool[k], pool[j]);
        }
        pool.resize(take);
        std::vector<std::size_t> balanced = minority;
        balanced.insert(balanced.end(), pool.begin(), pool.end());
        std::sort(balanced.begin(), balanced.end());
        model.forests.push_back(
            fit_forest(X, y, balanced, inner_trees, TreeConfig{}, Rng::mix(seed, 5000 + o)));
    }
    return model;
}

// --- serialization -------------------------------------------------------------

inline Json tree_to_json(const DecisionTree& tree) {
    Json nodes = Json::array();
    for (const auto& n : tree.nodes)
        nodes.push_back({{"f", n.feature}, {"t", n.threshold}, {"l", n.left}, {"r", n.right},
                         {"v", n.value}});
    return nodes;
}

inline DecisionTree tree_from_json(const Json& j) {
    DecisionTree tree;
    for (const auto& n : j)
        tree.nodes.push_back(TreeNode{n.at("f").get<int>(), n.at("t").get<double>(),
                                      n.at("l").get<int>(), n.at("r").get<int>(),
                                      n.at("v").get<double>()});
    return tree;
}

inline Json forest_to_json(const RandomForest& forest) {
    Json trees = Json::array();
    for (const auto& tree : forest.trees) trees.push_back(tree_to_json(tree));
    return trees;
}

inline RandomForest forest_from_json(const Json& j) {
    RandomForest forest;
    for (const auto& tree : j) forest.trees.push_back(tree_from_json(tree));
    return forest;
}

}  // namespace jitvp
