#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "echelon/gbt.hpp"
#include "echelon/rng.hpp"

using namespace echelon;

namespace {

/// Brute-force split oracle: enumerates every midpoint threshold and scores
/// the partition by explicitly minimizing the regularized quadratic objective
/// on each side (no prefix-sum shortcut). Same tie rule: first best in
/// (feature, threshold) order.
struct OracleSplit {
    int feature;
    double threshold;
    double gain;
};

double node_objective(const std::vector<double>& g, const std::vector<double>& h,
                      const std::vector<int>& rows, double lambda) {
    double G = 0.0, H = 0.0;
    for (int i : rows) {
        G += g[static_cast<std::size_t>(i)];
        H += h[static_cast<std::size_t>(i)];
    }
    const double w = -G / (H + lambda);
    return G * w + 0.5 * (H + lambda) * w * w;
}

std::optional<OracleSplit> oracle_best_split(const Matrix& X, const std::vector<double>& g,
                                             const std::vector<double>& h,
                                             const std::vector<int>& rows, double lambda,
                                             double gamma) {
    std::optional<OracleSplit> best;
    const double parent = node_objective(g, h, rows, lambda);
    for (std::size_t f = 0; f < X.cols(); ++f) {
        std::vector<double> values;
        for (int i : rows) values.push_back(X(static_cast<std::size_t>(i), f));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t k = 0; k + 1 < values.size(); ++k) {
            const double mid = 0.5 * (values[k] + values[k + 1]);
            if (!(values[k] < mid && mid < values[k + 1])) continue;
            std::vector<int> left, right;
            for (int i : rows)
                (X(static_cast<std::size_t>(i), f) < mid ? left : right).push_back(i);
            if (left.empty() || right.empty()) continue;
            const double gain = parent - node_objective(g, h, left, lambda) -
                                node_objective(g, h, right, lambda) - gamma;
            if (gain <= 0.0) continue;
            if (!best || gain > best->gain)
                best = OracleSplit{static_cast<int>(f), mid, gain};
        }
    }
    return best;
}

/// Score one concrete (feature, threshold) candidate by the oracle's measure.
double oracle_gain_of(const Matrix& X, const std::vector<double>& g, const std::vector<double>& h,
                      const std::vector<int>& rows, double lambda, double gamma, int feature,
                      double threshold) {
    std::vector<int> left, right;
    for (int i : rows)
        (X(static_cast<std::size_t>(i), static_cast<std::size_t>(feature)) < threshold ? left
                                                                                       : right)
            .push_back(i);
    REQUIRE_FALSE(left.empty());
    REQUIRE_FALSE(right.empty());
    return node_objective(g, h, rows, lambda) - node_objective(g, h, left, lambda) -
           node_objective(g, h, right, lambda) - gamma;
}

/// Walk the fitted tree and certify every decision against the exhaustive
/// search: each split must attain the brute-force maximum gain (to fp
/// tolerance), each leaf must be optimal (no positive-gain split left) with
/// the closed-form weight. Exact floating-point ties between distinct
/// candidates are accepted as long as the chosen one is co-optimal.
void oracle_validate(const Tree& tree, int node, const Matrix& X, const std::vector<double>& g,
                     const std::vector<double>& h, std::vector<int> rows, int depth, int max_depth,
                     double lambda, double gamma) {
    const double tol = 1e-9;
    double G = 0.0, H = 0.0;
    for (int i : rows) {
        G += g[static_cast<std::size_t>(i)];
        H += h[static_cast<std::size_t>(i)];
    }
    const TreeNode& n = tree[static_cast<std::size_t>(node)];
    const auto best = oracle_best_split(X, g, h, rows, lambda, gamma);

    if (n.is_leaf()) {
        REQUIRE(n.weight == Catch::Approx(-G / (H + lambda)).margin(1e-12));
        if (depth < max_depth && rows.size() >= 2 && best) REQUIRE(best->gain <= tol);
        return;
    }

    REQUIRE(depth < max_depth);
    REQUIRE(rows.size() >= 2);
    REQUIRE(best.has_value());
    const double got_gain =
        oracle_gain_of(X, g, h, rows, lambda, gamma, n.feature, n.threshold);
    REQUIRE(got_gain > 0.0);
    REQUIRE(got_gain >= best->gain - tol * std::max(1.0, std::abs(best->gain)));
    if (got_gain < best->gain - 1e-13) {
        // exact tie territory only; anything larger is a real disagreement
        REQUIRE(std::abs(got_gain - best->gain) <= tol * std::max(1.0, std::abs(best->gain)));
    }

    std::vector<int> left, right;
    for (int i : rows)
        (X(static_cast<std::size_t>(i), static_cast<std::size_t>(n.feature)) < n.threshold ? left
                                                                                           : right)
            .push_back(i);
    oracle_validate(tree, n.left, X, g, h, std::move(left), depth + 1, max_depth, lambda, gamma);
    oracle_validate(tree, n.right, X, g, h, std::move(right), depth + 1, max_depth, lambda, gamma);
}

}  // namespace

TEST_CASE("fit_tree: a single row becomes one leaf") {
    Matrix X(1, 2);
    const Tree t = fit_tree(X, {2.0}, {1.0}, 5, 1.0, 0.0);
    REQUIRE(t.size() == 1);
    REQUIRE(t[0].is_leaf());
    REQUIRE(t[0].weight == Catch::Approx(-2.0 / 2.0));
}

TEST_CASE("fit_tree: depth-0 leaf weight from gradient algebra") {
    // squared loss from prediction 0 on y = [0, 1]: g = pred - y = [0, -1]
    Matrix X(2, 1);
    X(0, 0) = 0.0;
    X(1, 0) = 1.0;
    const Tree t = fit_tree(X, {0.0, -1.0}, {1.0, 1.0}, 0, 1.0, 0.0);
    REQUIRE(t.size() == 1);
    REQUIRE(t[0].weight == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("fit_tree: indicator target splits at the class midpoint") {
    Matrix X(4, 1);
    X(0, 0) = 0.2;
    X(1, 0) = 0.3;
    X(2, 0) = 0.7;
    X(3, 0) = 0.9;
    const std::vector<double> y{0, 0, 1, 1};
    std::vector<double> g(4);
    for (int i = 0; i < 4; ++i) g[static_cast<std::size_t>(i)] = 0.0 - y[static_cast<std::size_t>(i)];
    const Tree t = fit_tree(X, g, {1, 1, 1, 1}, 1, 0.0, 0.0);
    REQUIRE_FALSE(t[0].is_leaf());
    REQUIRE(t[0].threshold == Catch::Approx(0.5));
    for (int i = 0; i < 4; ++i) {
        const double x = X(static_cast<std::size_t>(i), 0);
        REQUIRE(tree_predict(t, &x) == Catch::Approx(y[static_cast<std::size_t>(i)]).margin(1e-12));
    }
}

TEST_CASE("fit_tree: equals the brute-force oracle on 50 random instances") {
    Rng rng(404);
    for (int inst = 0; inst < 50; ++inst) {
        const auto rows = static_cast<std::size_t>(rng.uniform_int(5, 200));
        const std::size_t cols = 5;
        Matrix X(rows, cols);
        for (std::size_t i = 0; i < X.size(); ++i)
            X[i] = std::round(rng.uniform(-3.0, 3.0) * 4.0) / 4.0;  // coarse grid forces ties
        std::vector<double> g(rows), h(rows, 1.0);
        for (double& v : g) v = rng.uniform(-2.0, 2.0);
        const int depth = static_cast<int>(rng.uniform_int(1, 4));
        const double lambda = rng.uniform() < 0.5 ? 0.0 : 1.0;
        const double gamma = rng.uniform() < 0.5 ? 0.0 : 0.1;

        const Tree got = fit_tree(X, g, h, depth, lambda, gamma);
        std::vector<int> idx(rows);
        std::iota(idx.begin(), idx.end(), 0);
        oracle_validate(got, 0, X, g, h, std::move(idx), 0, depth, lambda, gamma);
    }
}

TEST_CASE("gbt: constant target gives the base score and zero-weight leaves") {
    Matrix X(10, 2);
    Rng rng(1);
    for (std::size_t i = 0; i < X.size(); ++i) X[i] = rng.uniform();
    GbtEnsemble m;
    m.fit(X, std::vector<double>(10, 4.25), GbtParams{20, 3, 0.1, 1.0, 0.0});
    REQUIRE(m.base_score() == 4.25);
    std::vector<double> x{0.5, 0.5};
    REQUIRE(m.predict(x) == Catch::Approx(4.25).margin(1e-12));
    for (const Tree& t : m.trees())
        for (const TreeNode& n : t)
            if (n.is_leaf()) REQUIRE(std::abs(n.weight) < 1e-12);
}

TEST_CASE("gbt: noiseless linear data fits to well under 1% of target std") {
    Rng rng(77);
    const std::size_t n = 50;
    Matrix X(n, 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 3; ++c) X(i, c) = rng.uniform(0.0, 1.0);
        y[i] = 3.0 * X(i, 0) - 2.0 * X(i, 1) + 0.5;
    }
    GbtEnsemble m;
    m.fit(X, y, GbtParams{100, 3, 0.3, 1.0, 0.0});
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : y) var += (v - mean) * (v - mean);
    const double target_std = std::sqrt(var / static_cast<double>(n));
    REQUIRE(std::sqrt(m.train_mse(X, y)) < 0.01 * target_std);
}

TEST_CASE("gbt: training MSE is non-increasing in tree count") {
    Rng rng(88);
    const std::size_t n = 60;
    Matrix X(n, 4);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 4; ++c) X(i, c) = rng.uniform(-1.0, 1.0);
        y[i] = std::sin(3.0 * X(i, 0)) + 0.3 * X(i, 1) * X(i, 2) + rng.gaussian(0.0, 0.05);
    }
    GbtEnsemble m;
    m.fit(X, y, GbtParams{60, 3, 0.2, 1.0, 0.0});

    std::vector<double> pred(n, m.base_score());
    double prev_mse = std::numeric_limits<double>::infinity();
    for (const Tree& t : m.trees()) {
        double mse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] += m.eta() * tree_predict(t, X.data() + i * X.cols());
            const double e = pred[i] - y[i];
            mse += e * e;
        }
        mse /= static_cast<double>(n);
        REQUIRE(mse <= prev_mse + 1e-12);
        prev_mse = mse;
    }
}

TEST_CASE("gbt: predict matches per-tree path evaluation") {
    Rng rng(99);
    Matrix X(40, 3);
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t c = 0; c < 3; ++c) X(i, c) = rng.uniform(-2.0, 2.0);
        y[i] = X(i, 0) * X(i, 1) + X(i, 2);
    }
    GbtEnsemble m;
    m.fit(X, y, GbtParams{30, 4, 0.15, 1.0, 0.0});

    for (int probe = 0; probe < 20; ++probe) {
        std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                              rng.uniform(-2.0, 2.0)};
        double expect = m.base_score();
        for (const Tree& t : m.trees()) {
            int id = 0;
            while (!t[static_cast<std::size_t>(id)].is_leaf()) {
                const TreeNode& nd = t[static_cast<std::size_t>(id)];
                id = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
            }
            expect += m.eta() * t[static_cast<std::size_t>(id)].weight;
        }
        REQUIRE(m.predict(x) == expect);
    }
}

TEST_CASE("gbt: error paths") {
    Matrix X(3, 2);
    GbtEnsemble m;
    REQUIRE_THROWS_AS(m.fit(X, {1.0, std::nan(""), 2.0}, GbtParams{}), std::invalid_argument);
    REQUIRE_THROWS_AS(m.fit(Matrix(1, 2), {1.0}, GbtParams{}), std::invalid_argument);

    m.fit(X, {1.0, 2.0, 3.0}, GbtParams{5, 2, 0.1, 1.0, 0.0});
    std::vector<double> wrong_dim{1.0, 2.0, 3.0};
    REQUIRE_THROWS_AS(m.predict(wrong_dim), std::invalid_argument);
}
