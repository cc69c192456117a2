#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "echelon/matrix.hpp"

namespace echelon {

/// One node of a regression tree, stored flat. A node is a leaf iff left < 0.
/// Navigation: x[feature] < threshold goes left, otherwise right.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;

    bool is_leaf() const { return left < 0; }
};

using Tree = std::vector<TreeNode>;

inline double tree_predict(const Tree& tree, const double* x) {
    int id = 0;
    while (!tree[static_cast<std::size_t>(id)].is_leaf()) {
        const TreeNode& n = tree[static_cast<std::size_t>(id)];
        id = x[n.feature] < n.threshold ? n.left : n.right;
    }
    return tree[static_cast<std::size_t>(id)].weight;
}

struct GbtParams {
    int n_trees = 100;
    int max_depth = 4;
    double eta = 0.1;      // shrinkage
    double lambda = 1.0;   // L2 penalty on leaf weights
    double gamma = 0.0;    // per-split penalty
};

namespace detail {

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool found = false;
};

/// Exact greedy split search over the rows in `idx`. Thresholds are midpoints
/// between consecutive distinct sorted feature values; ties on gain resolve to
/// the lowest feature index, then the lowest threshold.
inline SplitChoice best_split(const Matrix& X, const std::vector<double>& g,
                              const std::vector<double>& h, const std::vector<int>& idx,
                              double lambda, double gamma) {
    double G = 0.0, H = 0.0;
    for (int i : idx) {
        G += g[static_cast<std::size_t>(i)];
        H += h[static_cast<std::size_t>(i)];
    }
    const double parent_score = G * G / (H + lambda);

    SplitChoice best;
    std::vector<int> order(idx);
    for (std::size_t f = 0; f < X.cols(); ++f) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double va = X(static_cast<std::size_t>(a), f);
            const double vb = X(static_cast<std::size_t>(b), f);
            return va < vb;
        });
        double GL = 0.0, HL = 0.0;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            const auto row = static_cast<std::size_t>(order[k]);
            GL += g[row];
            HL += h[row];
            const double lo = X(row, f);
            const double hi = X(static_cast<std::size_t>(order[k + 1]), f);
            if (lo == hi) continue;
            const double mid = 0.5 * (lo + hi);
            if (!(lo < mid && mid < hi)) continue;  // adjacent floats; unsplittable
            const double GR = G - GL, HR = H - HL;
            const double gain =
                0.5 * (GL * GL / (HL + lambda) + GR * GR / (HR + lambda) - parent_score) - gamma;
            if (gain <= 0.0) continue;
            // Features and thresholds are scanned in ascending order, so
            // keeping the first maximum realizes the (feature, threshold) tie
            // rule.
            if (!best.found || gain > best.gain) best = {gain, static_cast<int>(f), mid, true};
        }
    }
    return best;
}

inline int grow(Tree& tree, const Matrix& X, const std::vector<double>& g,
                const std::vector<double>& h, std::vector<int> idx, int depth, int max_depth,
                double lambda, double gamma) {
    double G = 0.0, H = 0.0;
    for (int i : idx) {
        G += g[static_cast<std::size_t>(i)];
        H += h[static_cast<std::size_t>(i)];
    }

    const auto make_leaf = [&]() {
        TreeNode leaf;
        leaf.weight = -G / (H + lambda);
        tree.push_back(leaf);
        return static_cast<int>(tree.size() - 1);
    };

    if (depth >= max_depth || idx.size() < 2) return make_leaf();
    const SplitChoice split = best_split(X, g, h, idx, lambda, gamma);
    if (!split.found || split.gain <= 0.0) return make_leaf();

    std::vector<int> left_idx, right_idx;
    for (int i : idx) {
        if (X(static_cast<std::size_t>(i), static_cast<std::size_t>(split.feature)) < split.threshold)
            left_idx.push_back(i);
        else
            right_idx.push_back(i);
    }

    const int id = static_cast<int>(tree.size());
    tree.emplace_back();
    tree[static_cast<std::size_t>(id)].feature = split.feature;
    tree[static_cast<std::size_t>(id)].threshold = split.threshold;
    const int l = grow(tree, X, g, h, std::move(left_idx), depth + 1, max_depth, lambda, gamma);
    const int r = grow(tree, X, g, h, std::move(right_idx), depth + 1, max_depth, lambda, gamma);
    tree[static_cast<std::size_t>(id)].left = l;
    tree[static_cast<std::size_t>(id)].right = r;
    return id;
}

}  // namespace detail

/// Fit a single tree to gradient/hessian pairs.
inline Tree fit_tree(const Matrix& X, const std::vector<double>& g, const std::vector<double>& h,
                     int max_depth, double lambda, double gamma) {
    if (X.rows() == 0) throw std::invalid_argument("fit_tree: empty data");
    if (g.size() != X.rows() || h.size() != X.rows())
        throw std::invalid_argument("fit_tree: gradient size mismatch");
    Tree tree;
    std::vector<int> idx(X.rows());
    std::iota(idx.begin(), idx.end(), 0);
    detail::grow(tree, X, g, h, std::move(idx), 0, max_depth, lambda, gamma);
    return tree;
}

/// Additive ensemble under squared loss: g = pred - y, h = 1.
/// prediction = base_score + eta * sum of tree outputs.
class GbtEnsemble {
public:
    GbtEnsemble() = default;

    void fit(const Matrix& X, const std::vector<double>& y, const GbtParams& params) {
        if (X.rows() < 2) throw std::invalid_argument("GbtEnsemble::fit: need at least 2 rows");
        if (y.size() != X.rows()) throw std::invalid_argument("GbtEnsemble::fit: target size mismatch");
        for (double v : y)
            if (!std::isfinite(v)) throw std::invalid_argument("GbtEnsemble::fit: non-finite target");

        params_ = params;
        n_features_ = X.cols();
        trees_.clear();
        base_score_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

        std::vector<double> pred(y.size(), base_score_);
        std::vector<double> g(y.size()), h(y.size(), 1.0);
        for (int k = 0; k < params.n_trees; ++k) {
            for (std::size_t i = 0; i < y.size(); ++i) g[i] = pred[i] - y[i];
            Tree tree = fit_tree(X, g, h, params.max_depth, params.lambda, params.gamma);
            for (std::size_t i = 0; i < y.size(); ++i)
                pred[i] += params.eta * tree_predict(tree, row_ptr(X, i));
            trees_.push_back(std::move(tree));
        }
    }

    double predict(const double* x, std::size_t dim) const {
        if (dim != n_features_) throw std::invalid_argument("GbtEnsemble::predict: dimension mismatch");
        double out = base_score_;
        for (const Tree& t : trees_) out += params_.eta * tree_predict(t, x);
        return out;
    }

    double predict(const std::vector<double>& x) const { return predict(x.data(), x.size()); }

    double train_mse(const Matrix& X, const std::vector<double>& y) const {
        double s = 0.0;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const double e = predict(row_ptr(X, i), X.cols()) - y[i];
            s += e * e;
        }
        return s / static_cast<double>(X.rows());
    }

    const std::vector<Tree>& trees() const { return trees_; }
    std::vector<Tree>& trees() { return trees_; }
    double base_score() const { return base_score_; }
    void set_base_score(double b) { base_score_ = b; }
    double eta() const { return params_.eta; }
    const GbtParams& params() const { return params_; }
    void set_params(const GbtParams& p) { params_ = p; }
    std::size_t n_features() const { return n_features_; }
    void set_n_features(std::size_t n) { n_features_ = n; }

private:
    static const double* row_ptr(const Matrix& X, std::size_t r) { return X.data() + r * X.cols(); }

    GbtParams params_;
    std::vector<Tree> trees_;
    double base_score_ = 0.0;
    std::size_t n_features_ = 0;
};

}  // namespace echelon
