#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "echelon/gbt.hpp"
#include "echelon/matrix.hpp"

namespace echelon {

struct ShapResult {
    std::vector<double> phi;  // one attribution per feature
    double base_value = 0.0;  // mean ensemble prediction over the background
};

namespace detail {

inline const std::array<double, 32>& factorials() {
    static const std::array<double, 32> f = [] {
        std::array<double, 32> a{};
        a[0] = 1.0;
        for (std::size_t i = 1; i < a.size(); ++i) a[i] = a[i - 1] * static_cast<double>(i);
        return a;
    }();
    return f;
}

/// Per-path bookkeeping for one (x, z) pair: for every distinct feature on the
/// path, whether x (resp. z) satisfies all of that feature's edge conditions.
struct PathFeature {
    int feature;
    bool x_ok;
    bool z_ok;
};

/// Exact Shapley contributions of a single tree for the pair (x, z), where z
/// supplies the values of features outside the coalition. Each leaf splits its
/// path features into A = {needed from x} and B = {forbidden, i.e. only z
/// passes}; a leaf with a feature failing both sides is unreachable under any
/// coalition. The leaf adds
///     +value * (a-1)! b! / (a+b)!   to phi_j for j in A,
///     -value * a! (b-1)! / (a+b)!   to phi_j for j in B,
/// which is the subset-enumeration Shapley sum in closed form (free features
/// cancel out of the weights).
inline void tree_shap_pair(const Tree& tree, const double* x, const double* z,
                           std::vector<double>& phi) {
    const auto& fac = factorials();
    std::vector<PathFeature> path;

    const auto descend = [&](auto&& self, int id) -> void {
        const TreeNode& n = tree[static_cast<std::size_t>(id)];
        if (n.is_leaf()) {
            std::size_t a = 0, b = 0;
            for (const PathFeature& p : path) {
                if (p.x_ok && !p.z_ok) ++a;
                if (!p.x_ok && p.z_ok) ++b;
            }
            if (a == 0 && b == 0) return;  // identical routing: no attribution
            const double w_pos = a > 0 ? fac[a - 1] * fac[b] / fac[a + b] : 0.0;
            const double w_neg = b > 0 ? fac[a] * fac[b - 1] / fac[a + b] : 0.0;
            for (const PathFeature& p : path) {
                if (p.x_ok && !p.z_ok) phi[static_cast<std::size_t>(p.feature)] += n.weight * w_pos;
                if (!p.x_ok && p.z_ok) phi[static_cast<std::size_t>(p.feature)] -= n.weight * w_neg;
            }
            return;
        }

        for (int side = 0; side < 2; ++side) {
            const bool left = side == 0;
            const bool x_pass = left ? x[n.feature] < n.threshold : !(x[n.feature] < n.threshold);
            const bool z_pass = left ? z[n.feature] < n.threshold : !(z[n.feature] < n.threshold);

            int slot = -1;
            for (std::size_t i = 0; i < path.size(); ++i)
                if (path[i].feature == n.feature) slot = static_cast<int>(i);

            PathFeature saved{};
            bool pushed = false;
            if (slot < 0) {
                path.push_back({n.feature, x_pass, z_pass});
                pushed = true;
            } else {
                saved = path[static_cast<std::size_t>(slot)];
                path[static_cast<std::size_t>(slot)].x_ok = saved.x_ok && x_pass;
                path[static_cast<std::size_t>(slot)].z_ok = saved.z_ok && z_pass;
            }
            const PathFeature& cur = pushed ? path.back() : path[static_cast<std::size_t>(slot)];
            if (cur.x_ok || cur.z_ok) self(self, left ? n.left : n.right);
            if (pushed)
                path.pop_back();
            else
                path[static_cast<std::size_t>(slot)] = saved;
        }
    };

    descend(descend, 0);
}

}  // namespace detail

/// Interventional TreeSHAP for a boosted ensemble: Shapley values of the
/// prediction at x with missing features drawn from the background rows.
/// Satisfies local accuracy: base_value + sum(phi) == predict(x).
inline ShapResult tree_shap(const GbtEnsemble& model, const std::vector<double>& x,
                            const Matrix& background) {
    if (background.rows() == 0) throw std::invalid_argument("tree_shap: empty background");
    if (background.cols() != x.size() || x.size() != model.n_features())
        throw std::invalid_argument("tree_shap: dimension mismatch");

    ShapResult result;
    result.phi.assign(x.size(), 0.0);
    std::vector<double> pair_phi(x.size());

    for (std::size_t r = 0; r < background.rows(); ++r) {
        const double* z = background.data() + r * background.cols();
        for (const Tree& tree : model.trees()) {
            std::fill(pair_phi.begin(), pair_phi.end(), 0.0);
            detail::tree_shap_pair(tree, x.data(), z, pair_phi);
            for (std::size_t j = 0; j < x.size(); ++j)
                result.phi[j] += model.eta() * pair_phi[j];
        }
        result.base_value += model.predict(z, background.cols());
    }

    const double inv = 1.0 / static_cast<double>(background.rows());
    for (double& p : result.phi) p *= inv;
    result.base_value *= inv;
    return result;
}

/// Pearson correlation matrix of the columns of `data` (degenerate columns
/// correlate as 0).
inline Matrix feature_correlation(const Matrix& data) {
    const std::size_t n = data.rows(), d = data.cols();
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t r = 0; r < n; ++r) mean[c] += data(r, c);
        mean[c] /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
            const double dv = data(r, c) - mean[c];
            sd[c] += dv * dv;
        }
        sd[c] = std::sqrt(sd[c]);
    }
    Matrix corr(d, d);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            double cov = 0.0;
            for (std::size_t r = 0; r < n; ++r)
                cov += (data(r, a) - mean[a]) * (data(r, b) - mean[b]);
            const double denom = sd[a] * sd[b];
            const double rho = denom == 0.0 ? (a == b ? 1.0 : 0.0) : cov / denom;
            corr(a, b) = rho;
            corr(b, a) = rho;
        }
    }
    for (std::size_t a = 0; a < d; ++a)
        if (sd[a] == 0.0) corr(a, a) = 0.0;
    return corr;
}

}  // namespace echelon
