#pragma once

// CART regression trees.
//
// Columns are sorted once per training matrix (SortedColumns). A tree then
// keeps one order array per feature over its own sample slots and partitions
// all of them stably at every split, so a node's slots stay contiguous and
// sorted in every feature without re-sorting.
//
// Split search at a node scores max_features of the features that still vary
// inside it, drawn in a seeded random order. Rows with x <= threshold go left. Ties on quality go to the lowest
// feature index, then the lowest threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "magic_meter/core/matrix.hpp"
#include "magic_meter/core/random.hpp"

namespace magic_meter {

enum class Criterion { SquaredError, AbsoluteError };

inline std::string criterion_name(Criterion c) {
    return c == Criterion::SquaredError ? "squared_error" : "absolute_error";
}

inline Criterion parse_criterion(std::string_view s) {
    if (s == "squared_error" || s == "mse" || s == "variance") return Criterion::SquaredError;
    if (s == "absolute_error" || s == "mae") return Criterion::AbsoluteError;
    throw std::invalid_argument("unknown split criterion '" + std::string(s) + "'");
}

struct TreeParams {
    std::uint32_t max_depth = 0;  // 0: unlimited
    std::uint32_t min_samples_leaf = 1;
    double max_features = 1.0;  // fraction of columns scored per node
    Criterion criterion = Criterion::SquaredError;

    bool operator==(const TreeParams&) const = default;
};

inline std::size_t features_per_node(double fraction, std::size_t d) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw std::invalid_argument("max_features must be in (0, 1]");
    }
    const auto k = static_cast<std::size_t>(fraction * static_cast<double>(d) + 1e-9);
    return std::clamp<std::size_t>(k, 1, d);
}

struct TreeNode {
    std::int32_t feature = -1;  // -1: leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;
    std::uint32_t count = 0;

    bool leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> x) const {
        std::uint32_t i = 0;
        while (!nodes[i].leaf()) {
            const auto& n = nodes[i];
            i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes[i].value;
    }

    std::size_t depth() const {
        std::size_t best = 0;
        std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
        while (!stack.empty()) {
            auto [i, d] = stack.back();
            stack.pop_back();
            best = std::max(best, d);
            if (!nodes[i].leaf()) {
                stack.push_back({nodes[i].left, d + 1});
                stack.push_back({nodes[i].right, d + 1});
            }
        }
        return best;
    }

    bool operator==(const DecisionTree&) const = default;
};

/// Column-major copy of a training matrix plus each column's row order.
struct SortedColumns {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;        // values[f * rows + r]
    std::vector<std::uint32_t> order;  // order[f * rows + k]: k-th smallest row of column f

    static SortedColumns build(const Matrix& x) {
        SortedColumns s;
        s.rows = x.rows();
        s.cols = x.cols();
        s.values.resize(s.rows * s.cols);
        s.order.resize(s.rows * s.cols);
        for (std::size_t r = 0; r < s.rows; ++r) {
            for (std::size_t f = 0; f < s.cols; ++f) s.values[f * s.rows + r] = x(r, f);
        }
        for (std::size_t f = 0; f < s.cols; ++f) {
            auto* o = s.order.data() + f * s.rows;
            const auto* v = s.values.data() + f * s.rows;
            std::iota(o, o + s.rows, 0u);
            std::stable_sort(o, o + s.rows, [v](std::uint32_t a, std::uint32_t b) { return v[a] < v[b]; });
        }
        return s;
    }

    double at(std::size_t r, std::size_t f) const { return values[f * rows + r]; }
};

namespace detail {

/// Sum of absolute deviations from the median of a growing multiset.
class RunningAbsDeviation {
  public:
    void push(double v) {
        if (lower_.empty() || v <= lower_.top()) {
            lower_.push(v);
            lower_sum_ += v;
        } else {
            upper_.push(v);
            upper_sum_ += v;
        }
        if (lower_.size() > upper_.size() + 1) {
            const double t = lower_.top();
            lower_.pop();
            lower_sum_ -= t;
            upper_.push(t);
            upper_sum_ += t;
        } else if (upper_.size() > lower_.size()) {
            const double t = upper_.top();
            upper_.pop();
            upper_sum_ -= t;
            lower_.push(t);
            lower_sum_ += t;
        }
    }

    double cost() const {
        if (lower_.empty()) return 0.0;
        const double m = lower_.top();
        return (m * static_cast<double>(lower_.size()) - lower_sum_) +
               (upper_sum_ - m * static_cast<double>(upper_.size()));
    }

  private:
    std::priority_queue<double> lower_;
    std::priority_queue<double, std::vector<double>, std::greater<double>> upper_;
    double lower_sum_ = 0.0;
    double upper_sum_ = 0.0;
};

inline double median(std::vector<double> v) {
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
    const double hi = v[m];
    if (v.size() % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
    return 0.5 * (lo + hi);
}

class TreeBuilder {
  public:
    TreeBuilder(const SortedColumns& cols, std::span<const double> y,
                std::span<const std::uint32_t> counts, const TreeParams& params, std::uint64_t seed)
        : cols_(cols), params_(params), rng_(seed) {
        // Expand row multiplicities into sample slots.
        std::vector<std::uint32_t> first(cols.rows + 1, 0);
        for (std::size_t r = 0; r < cols.rows; ++r) {
            first[r + 1] = first[r] + (counts.empty() ? 1u : counts[r]);
        }
        m_ = first[cols.rows];
        if (m_ == 0) throw std::invalid_argument("cannot fit a tree on zero rows");
        y_.resize(m_);
        for (std::size_t r = 0; r < cols.rows; ++r) {
            for (auto s = first[r]; s < first[r + 1]; ++s) {
                y_[s] = y[r];
            }
        }
        order_.resize(cols.cols * m_);
        xs_.resize(cols.cols * m_);
        for (std::size_t f = 0; f < cols.cols; ++f) {
            std::size_t k = 0;
            const auto* o = cols.order.data() + f * cols.rows;
            for (std::size_t i = 0; i < cols.rows; ++i) {
                const double v = cols.at(o[i], f);
                for (auto s = first[o[i]]; s < first[o[i] + 1]; ++s) {
                    order_[f * m_ + k] = s;
                    xs_[f * m_ + k++] = v;
                }
            }
        }
        slots_.resize(m_);
        std::iota(slots_.begin(), slots_.end(), 0u);
        goes_left_.resize(m_);
        scratch_.resize(m_);
        scratch_x_.resize(m_);
        k_ = features_per_node(params.max_features, cols.cols);
    }

    DecisionTree build() {
        tree_.nodes.clear();
        tree_.nodes.emplace_back();
        // A node only carries the features that still vary inside it; the
        // others are never scored or partitioned again below it.
        struct Task {
            std::uint32_t node, begin, end, depth;
            std::vector<std::uint32_t> active;
        };
        std::vector<Task> stack(1);
        stack[0] = {0, 0, m_, 0, {}};
        for (std::uint32_t f = 0; f < cols_.cols; ++f) {
            if (varies(f, 0, m_)) stack[0].active.push_back(f);
        }
        while (!stack.empty()) {
            Task t = std::move(stack.back());
            stack.pop_back();
            const auto split = find_split(t.begin, t.end, t.depth, t.active);
            auto& node = tree_.nodes[t.node];
            node.count = t.end - t.begin;
            node.value = leaf_value(t.begin, t.end);
            if (!split.found) continue;
            const std::uint32_t mid = partition(t.begin, t.end, split.feature, split.threshold, t.active);
            const auto left = static_cast<std::uint32_t>(tree_.nodes.size());
            tree_.nodes[t.node].feature = static_cast<std::int32_t>(split.feature);
            tree_.nodes[t.node].threshold = split.threshold;
            tree_.nodes[t.node].left = left;
            tree_.nodes[t.node].right = left + 1;
            tree_.nodes.emplace_back();
            tree_.nodes.emplace_back();
            Task lt{left, t.begin, mid, t.depth + 1, {}};
            Task rt{left + 1, mid, t.end, t.depth + 1, {}};
            for (auto f : t.active) {
                if (varies(f, lt.begin, lt.end)) lt.active.push_back(f);
                if (varies(f, rt.begin, rt.end)) rt.active.push_back(f);
            }
            stack.push_back(std::move(rt));
            stack.push_back(std::move(lt));
        }
        return std::move(tree_);
    }

  private:
    struct Split {
        bool found = false;
        std::size_t feature = 0;
        double threshold = 0.0;
        double score = std::numeric_limits<double>::infinity();  // lower is better
    };

    bool varies(std::uint32_t f, std::uint32_t begin, std::uint32_t end) const {
        const auto* xf = xs_.data() + std::size_t{f} * m_;
        return end - begin > 1 && xf[begin] != xf[end - 1];
    }

    double leaf_value(std::uint32_t begin, std::uint32_t end) const {
        const auto* o = slots_.data();
        bool constant = true;
        for (auto k = begin + 1; k < end && constant; ++k) constant = y_[o[k]] == y_[o[begin]];
        if (constant) return y_[o[begin]];
        if (params_.criterion == Criterion::AbsoluteError) {
            std::vector<double> v;
            v.reserve(end - begin);
            for (auto k = begin; k < end; ++k) v.push_back(y_[o[k]]);
            return median(std::move(v));
        }
        double s = 0.0;
        for (auto k = begin; k < end; ++k) s += y_[o[k]];
        return s / static_cast<double>(end - begin);
    }

    Split find_split(std::uint32_t begin, std::uint32_t end, std::uint32_t depth,
                     const std::vector<std::uint32_t>& active) {
        Split best;
        const std::uint32_t n = end - begin;
        if (params_.max_depth != 0 && depth >= params_.max_depth) return best;
        if (n < 2 * std::max(1u, params_.min_samples_leaf)) return best;
        {
            const auto* o = slots_.data();
            const double y0 = y_[o[begin]];
            bool constant = true;
            for (auto k = begin + 1; k < end && constant; ++k) constant = y_[o[k]] == y0;
            if (constant) return best;
        }
        pool_ = active;
        const std::size_t draws = std::min(k_, pool_.size());
        for (std::size_t d = 0; d < draws; ++d) {
            const auto pick = d + uniform_index(rng_, pool_.size() - d);
            std::swap(pool_[d], pool_[pick]);
            score_feature(pool_[d], begin, end, best);
        }
        return best;
    }

    void consider(Split& best, std::size_t f, double score, double lo, double hi) const {
        double threshold = 0.5 * (lo + hi);
        if (!(threshold < hi)) threshold = lo;
        const bool better = score < best.score ||
                            (score == best.score &&
                             (f < best.feature || (f == best.feature && threshold < best.threshold)));
        if (!best.found || better) {
            best = {true, f, threshold, score};
        }
    }

    void score_feature(std::size_t f, std::uint32_t begin, std::uint32_t end, Split& best) {
        const auto* o = order_.data() + f * m_;
        const auto* xf = xs_.data() + f * m_;
        const std::uint32_t n = end - begin;
        const std::uint32_t min_leaf = std::max(1u, params_.min_samples_leaf);
        if (params_.criterion == Criterion::SquaredError) {
            double total = 0.0;
            for (auto k = begin; k < end; ++k) total += y_[o[k]];
            double left = 0.0;
            for (std::uint32_t i = 0; i + 1 < n; ++i) {
                left += y_[o[begin + i]];
                const std::uint32_t nl = i + 1, nr = n - nl;
                if (nl < min_leaf) continue;
                if (nr < min_leaf) break;
                const double lo = xf[begin + i], hi = xf[begin + i + 1];
                if (!(lo < hi)) continue;
                const double right = total - left;
                // Minimizing SSE is maximizing the sum of squared partial sums.
                const double score = -(left * left / nl + right * right / nr);
                consider(best, f, score, lo, hi);
            }
            return;
        }
        std::vector<double> prefix(n), suffix(n);
        RunningAbsDeviation acc;
        for (std::uint32_t i = 0; i < n; ++i) {
            acc.push(y_[o[begin + i]]);
            prefix[i] = acc.cost();
        }
        RunningAbsDeviation rev;
        for (std::uint32_t i = n; i-- > 0;) {
            rev.push(y_[o[begin + i]]);
            suffix[i] = rev.cost();
        }
        for (std::uint32_t i = 0; i + 1 < n; ++i) {
            const std::uint32_t nl = i + 1, nr = n - nl;
            if (nl < min_leaf) continue;
            if (nr < min_leaf) break;
            const double lo = xf[begin + i], hi = xf[begin + i + 1];
            if (!(lo < hi)) continue;
            consider(best, f, prefix[i] + suffix[i + 1], lo, hi);
        }
    }

    std::uint32_t partition(std::uint32_t begin, std::uint32_t end, std::size_t feature, double threshold,
                            const std::vector<std::uint32_t>& active) {
        std::uint32_t n_left = 0;
        for (auto k = begin; k < end; ++k) {
            const bool left = xs_[feature * m_ + k] <= threshold;
            goes_left_[order_[feature * m_ + k]] = left;
            n_left += left;
        }
        {
            std::uint32_t l = begin, r = 0;
            for (auto k = begin; k < end; ++k) {
                const auto s = slots_[k];
                if (goes_left_[s]) slots_[l++] = s;
                else scratch_[r++] = s;
            }
            std::copy(scratch_.begin(), scratch_.begin() + r, slots_.begin() + l);
        }
        for (const std::size_t f : active) {
            auto* o = order_.data() + f * m_;
            auto* xf = xs_.data() + f * m_;
            std::uint32_t l = begin, r = 0;
            for (auto k = begin; k < end; ++k) {
                const auto s = o[k];
                const double v = xf[k];
                if (goes_left_[s]) {
                    o[l] = s;
                    xf[l++] = v;
                } else {
                    scratch_[r] = s;
                    scratch_x_[r++] = v;
                }
            }
            std::copy(scratch_.begin(), scratch_.begin() + r, o + l);
            std::copy(scratch_x_.begin(), scratch_x_.begin() + r, xf + l);
        }
        return begin + n_left;
    }

    const SortedColumns& cols_;
    TreeParams params_;
    Rng rng_;
    std::uint32_t m_ = 0;
    std::vector<double> y_;
    std::vector<std::uint32_t> order_;
    std::vector<double> xs_;  // feature values in order_ order
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::uint32_t> scratch_;
    std::vector<double> scratch_x_;
    std::vector<std::uint32_t> slots_;  // node-contiguous, independent of features
    std::vector<std::uint32_t> pool_;
    std::size_t k_ = 1;
    DecisionTree tree_;
};

}  // namespace detail

/// Fits a tree on the rows of `cols`. counts[r] is the multiplicity of row r
/// (empty: every row once).
inline DecisionTree fit_tree(const SortedColumns& cols, std::span<const double> y,
                             const TreeParams& params, std::uint64_t seed,
                             std::span<const std::uint32_t> counts = {}) {
    if (cols.rows == 0) throw std::invalid_argument("cannot fit a tree on zero rows");
    if (cols.cols == 0) throw std::invalid_argument("cannot fit a tree without feature columns");
    if (y.size() != cols.rows) throw std::invalid_argument("label count does not match rows");
    if (!counts.empty() && counts.size() != cols.rows) {
        throw std::invalid_argument("row multiplicities do not match rows");
    }
    return detail::TreeBuilder(cols, y, counts, params, seed).build();
}

inline DecisionTree fit_tree(const Matrix& x, std::span<const double> y, const TreeParams& params,
                             std::uint64_t seed) {
    if (x.rows() == 0) throw std::invalid_argument("cannot fit a tree on zero rows");
    return fit_tree(SortedColumns::build(x), y, params, seed);
}

}  // namespace magic_meter
