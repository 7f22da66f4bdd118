#pragma once

// Random forest regression: bagged CART trees averaged at prediction time.
// Tree t draws its bootstrap sample and its feature order from
// derive_seed(seed, t), so the forest is independent of the thread count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "magic_meter/core/matrix.hpp"
#include "magic_meter/core/parallel.hpp"
#include "magic_meter/core/random.hpp"
#include "magic_meter/ml/tree.hpp"

namespace magic_meter {

struct ForestParams {
    std::uint32_t n_estimators = 100;
    TreeParams tree;
    bool bootstrap = true;

    bool operator==(const ForestParams&) const = default;
};

/// Prediction-only copy of a forest. Nodes of all trees share one array;
/// the two children of an internal node are adjacent, so a step is
/// `left + (x[feature] > threshold)`. Leaves point at themselves with an
/// infinite threshold, which lets a block of trees advance in lockstep for a
/// fixed number of steps without branching on leaf status. Compares equal to
/// any other packing: it is derived state.
struct PackedForest {
    struct Node {
        double threshold;
        std::uint32_t feature;
        std::uint32_t left;
    };
    static constexpr std::size_t kBlock = 16;

    std::vector<Node> nodes;
    std::vector<double> values;          // leaf value by node position
    std::vector<std::uint32_t> roots;
    std::vector<std::uint32_t> block_depth;  // max depth per block of kBlock trees

    bool empty() const noexcept { return roots.empty(); }

    static PackedForest build(const std::vector<DecisionTree>& trees) {
        PackedForest p;
        for (const auto& t : trees) {
            const auto root = static_cast<std::uint32_t>(p.nodes.size());
            p.roots.push_back(root);
            // Breadth-first: (original index, packed position).
            std::vector<std::pair<std::uint32_t, std::uint32_t>> queue{{0, root}};
            p.nodes.push_back({});
            p.values.push_back(0.0);
            for (std::size_t q = 0; q < queue.size(); ++q) {
                const auto [orig, pos] = queue[q];
                const auto& n = t.nodes[orig];
                if (n.leaf()) {
                    p.nodes[pos] = {std::numeric_limits<double>::infinity(), 0, pos};
                    p.values[pos] = n.value;
                    continue;
                }
                const auto child = static_cast<std::uint32_t>(p.nodes.size());
                p.nodes[pos] = {n.threshold, static_cast<std::uint32_t>(n.feature), child};
                p.nodes.resize(p.nodes.size() + 2);
                p.values.resize(p.values.size() + 2, 0.0);
                queue.push_back({n.left, child});
                queue.push_back({n.right, child + 1});
            }
        }
        for (std::size_t b = 0; b < trees.size(); b += kBlock) {
            std::size_t d = 0;
            for (std::size_t t = b; t < std::min(trees.size(), b + kBlock); ++t) d = std::max(d, trees[t].depth());
            p.block_depth.push_back(static_cast<std::uint32_t>(d));
        }
        return p;
    }

    /// Same value as averaging DecisionTree::predict in tree order. Inputs
    /// containing NaN must use the tree walk instead.
    double predict(std::span<const double> x) const {
        double s = 0.0;
        std::array<std::uint32_t, kBlock> at{};
        for (std::size_t b = 0; b < roots.size(); b += kBlock) {
            const std::size_t m = std::min(kBlock, roots.size() - b);
            for (std::size_t k = 0; k < m; ++k) at[k] = roots[b + k];
            for (std::uint32_t step = 0; step < block_depth[b / kBlock]; ++step) {
                std::uint32_t moved = 0;
                for (std::size_t k = 0; k < m; ++k) {
                    const Node& n = nodes[at[k]];
                    const std::uint32_t next = n.left + static_cast<std::uint32_t>(x[n.feature] > n.threshold);
                    moved |= next ^ at[k];
                    at[k] = next;
                }
                if (moved == 0) break;  // every tree in the block sits on a leaf
            }
            for (std::size_t k = 0; k < m; ++k) s += values[at[k]];
        }
        return s / static_cast<double>(roots.size());
    }

    bool operator==(const PackedForest&) const { return true; }
};

struct RandomForest {
    ForestParams params;
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    std::vector<DecisionTree> trees;
    PackedForest packed;  // rebuilt by pack() whenever trees change

    void pack() { packed = PackedForest::build(trees); }

    double predict(std::span<const double> x) const {
        if (!packed.empty() && std::none_of(x.begin(), x.end(), [](double v) { return std::isnan(v); })) {
            return packed.predict(x);
        }
        double s = 0.0;
        for (const auto& t : trees) s += t.predict(x);
        return s / static_cast<double>(trees.size());
    }

    std::vector<double> predict(const Matrix& x, unsigned threads = 1) const {
        if (x.cols() != n_features) throw std::invalid_argument("forest: feature count mismatch");
        std::vector<double> out(x.rows());
        parallel_for(x.rows(), threads, [&](std::size_t i) { out[i] = predict(x.row(i)); });
        return out;
    }

    bool operator==(const RandomForest&) const = default;
};

inline RandomForest fit_rfr(const Matrix& x, std::span<const double> y, const ForestParams& params,
                            std::uint64_t seed, unsigned threads = 1) {
    if (x.rows() == 0) throw std::invalid_argument("cannot fit a forest on zero rows");
    if (y.size() != x.rows()) throw std::invalid_argument("label count does not match rows");
    if (params.n_estimators < 1) throw std::invalid_argument("n_estimators must be at least 1");
    features_per_node(params.tree.max_features, x.cols());

    RandomForest model;
    model.params = params;
    model.seed = seed;
    model.n_features = x.cols();
    model.trees.resize(params.n_estimators);
    const auto sorted = SortedColumns::build(x);
    parallel_for(params.n_estimators, threads, [&](std::size_t t) {
        const auto tree_seed = derive_seed(seed, t);
        std::vector<std::uint32_t> counts;
        if (params.bootstrap) {
            Rng rng(mix64(tree_seed ^ 0xB0075742A9ULL));
            counts.assign(x.rows(), 0);
            for (std::size_t i = 0; i < x.rows(); ++i) ++counts[uniform_index(rng, x.rows())];
        }
        model.trees[t] = fit_tree(sorted, y, params.tree, tree_seed, counts);
    });
    model.pack();
    return model;
}

}  // namespace magic_meter
