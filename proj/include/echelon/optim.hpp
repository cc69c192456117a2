#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "echelon/matrix.hpp"
#include "echelon/rng.hpp"

namespace echelon {

/// AdamW with decoupled weight decay: parameters shrink by lr*wd*w before the
/// bias-corrected moment update is applied.
class AdamW {
public:
    explicit AdamW(double lr, double weight_decay = 0.0, double beta1 = 0.9,
                   double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::vector<Matrix*> params, const std::vector<Matrix>& grads) {
        if (params.size() != grads.size()) throw std::invalid_argument("AdamW: param/grad count mismatch");
        if (m_.empty()) {
            for (const Matrix* p : params) {
                m_.emplace_back(p->rows(), p->cols());
                v_.emplace_back(p->rows(), p->cols());
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t k = 0; k < params.size(); ++k) {
            Matrix& w = *params[k];
            const Matrix& g = grads[k];
            if (!w.same_shape(g)) throw std::invalid_argument("AdamW: gradient shape mismatch");
            for (std::size_t i = 0; i < w.size(); ++i) {
                w[i] -= lr_ * wd_ * w[i];
                m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g[i];
                v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g[i] * g[i];
                const double mhat = m_[k][i] / bc1;
                const double vhat = v_[k][i] / bc2;
                w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    long step_count() const { return t_; }

private:
    double lr_, wd_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Matrix> m_, v_;
};

/// Scale all gradients by max_norm/norm when the global L2 norm exceeds
/// max_norm. Returns the pre-clip norm.
inline double clip_gradients(std::vector<Matrix>& grads, double max_norm) {
    if (max_norm <= 0.0) throw std::invalid_argument("clip_gradients: max_norm must be > 0");
    double ss = 0.0;
    for (const Matrix& g : grads)
        for (std::size_t i = 0; i < g.size(); ++i) ss += g[i] * g[i];
    const double norm = std::sqrt(ss);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (Matrix& g : grads) g *= scale;
    }
    return norm;
}

/// Gaussian Xavier: entries ~ N(0, 2/(rows+cols)).
inline Matrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("xavier_init: dims must be >= 1");
    const double sd = std::sqrt(2.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.gaussian(0.0, sd);
    return m;
}

}  // namespace echelon
