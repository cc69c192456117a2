#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "echelon/autodiff.hpp"
#include "echelon/features.hpp"
#include "echelon/matrix.hpp"
#include "echelon/optim.hpp"
#include "echelon/rng.hpp"

namespace echelon {

/// Liquid recurrent cell. The state follows a leaky update whose leak rate
/// adapts to the input's order-volatility feature:
///
///   a_t     = tanh(W_in x_t + W_rec s_{t-1} + b)
///   alpha_t = clamp(alpha_base + beta_vol * x_t[order_std], 0.05, 0.95)
///   s_t     = (1 - alpha_t) s_{t-1} + alpha_t a_t + (dt/tau)(-s_{t-1} + a_t)
///
/// Quiet inputs keep the state smooth; volatile inputs raise alpha_t and let
/// the state track the activation faster.
struct LiquidCell {
    int n_units = 64;
    double alpha_base = 0.5;
    double beta_vol = 0.25;
    double tau = 1.0;
    double dt = 1.0;

    Matrix w_in;   // n_units x kFeatureDim
    Matrix w_rec;  // n_units x n_units
    Matrix b;      // n_units x 1
    Matrix w_out;  // kHorizon x n_units
    Matrix b_out;  // kHorizon x 1

    void init(Rng& rng) {
        const auto n = static_cast<std::size_t>(n_units);
        w_in = xavier_init(n, kFeatureDim, rng);
        w_rec = xavier_init(n, n, rng);
        b = Matrix(n, 1);
        w_out = xavier_init(kHorizon, n, rng);
        b_out = Matrix(kHorizon, 1);
    }

    std::size_t parameter_count() const {
        return w_in.size() + w_rec.size() + b.size() + w_out.size() + b_out.size();
    }

    double leak_rate(const FeatureVec& x) const {
        return std::clamp(alpha_base + beta_vol * x[kFeatOrderStd5], 0.05, 0.95);
    }
};

/// One state update outside the tape (inference path).
inline std::vector<double> lnn_step(const LiquidCell& cell, const std::vector<double>& s_prev,
                                    const FeatureVec& x) {
    const auto n = static_cast<std::size_t>(cell.n_units);
    if (s_prev.size() != n) throw std::invalid_argument("lnn_step: state size mismatch");
    for (double v : s_prev)
        if (!std::isfinite(v)) throw std::invalid_argument("lnn_step: non-finite state");

    const double alpha = cell.leak_rate(x);
    const double keep = (1.0 - alpha) - cell.dt / cell.tau;
    const double take = alpha + cell.dt / cell.tau;

    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        double act = cell.b(i, 0);
        for (std::size_t j = 0; j < kFeatureDim; ++j) act += cell.w_in(i, j) * x[j];
        for (std::size_t j = 0; j < n; ++j) act += cell.w_rec(i, j) * s_prev[j];
        s[i] = keep * s_prev[i] + take * std::tanh(act);
    }
    return s;
}

/// Run the window from a zero state; the final state feeds the linear readout.
inline std::vector<double> lnn_states(const LiquidCell& cell,
                                      const std::array<FeatureVec, kWindowLen>& window,
                                      std::vector<std::vector<double>>* all_states = nullptr) {
    std::vector<double> s(static_cast<std::size_t>(cell.n_units), 0.0);
    for (const FeatureVec& x : window) {
        s = lnn_step(cell, s, x);
        if (all_states) all_states->push_back(s);
    }
    return s;
}

inline Forecast lnn_forecast(const LiquidCell& cell,
                             const std::array<FeatureVec, kWindowLen>& window) {
    const std::vector<double> s = lnn_states(cell, window);
    Forecast out{};
    for (std::size_t k = 0; k < kHorizon; ++k) {
        double v = cell.b_out(k, 0);
        for (std::size_t j = 0; j < s.size(); ++j) v += cell.w_out(k, j) * s[j];
        out[k] = v;
    }
    return out;
}

struct LnnTapeNodes {
    ad::Tape::NodeId w_in, w_rec, b, w_out, b_out;
};

inline LnnTapeNodes lnn_leaves(ad::Tape& tape, const LiquidCell& cell) {
    return {tape.leaf(cell.w_in), tape.leaf(cell.w_rec), tape.leaf(cell.b),
            tape.leaf(cell.w_out), tape.leaf(cell.b_out)};
}

/// Forecast as a tape node (kHorizon x 1) for training and gradient checks.
inline ad::Tape::NodeId lnn_forecast_node(ad::Tape& tape, const LnnTapeNodes& p,
                                          const LiquidCell& cell,
                                          const std::array<FeatureVec, kWindowLen>& window) {
    ad::Tape::NodeId s = tape.leaf(Matrix(static_cast<std::size_t>(cell.n_units), 1));
    for (const FeatureVec& x : window) {
        Matrix xv(kFeatureDim, 1);
        for (std::size_t j = 0; j < kFeatureDim; ++j) xv(j, 0) = x[j];
        const auto xt = tape.leaf(std::move(xv));
        const auto act =
            tape.tanh(tape.add(tape.add(tape.matmul(p.w_in, xt), tape.matmul(p.w_rec, s)), p.b));
        const double alpha = cell.leak_rate(x);
        const double keep = (1.0 - alpha) - cell.dt / cell.tau;
        const double take = alpha + cell.dt / cell.tau;
        s = tape.add(tape.scale(s, keep), tape.scale(act, take));
    }
    return tape.add(tape.matmul(p.w_out, s), p.b_out);
}

struct TrainReport {
    std::vector<double> epoch_loss;
};

/// AdamW on MSE over minibatches; window order is reshuffled each epoch from
/// the supplied generator. Aborts on a non-finite loss.
inline TrainReport lnn_train(LiquidCell& cell, const WindowBatch& batch, int epochs, double lr,
                             int minibatch, Rng& rng, double weight_decay = 0.0) {
    if (batch.empty()) throw std::invalid_argument("lnn_train: empty batch");
    if (epochs < 0 || minibatch < 1) throw std::invalid_argument("lnn_train: bad epochs/minibatch");

    AdamW opt(lr, weight_decay);
    TrainReport report;
    std::vector<std::size_t> order(batch.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(minibatch)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(minibatch));
            ad::Tape tape;
            const LnnTapeNodes p = lnn_leaves(tape, cell);
            ad::Tape::NodeId total = -1;
            for (std::size_t k = begin; k < end; ++k) {
                const WindowSample& sample = batch[order[k]];
                const auto pred = lnn_forecast_node(tape, p, cell, sample.x);
                Matrix tv(kHorizon, 1);
                for (std::size_t j = 0; j < kHorizon; ++j) tv(j, 0) = sample.y[j];
                const auto loss = ad::mse(tape, pred, tape.leaf(std::move(tv)));
                total = total < 0 ? loss : tape.add(total, loss);
            }
            const auto loss_node = tape.scale(total, 1.0 / static_cast<double>(end - begin));
            const double loss = tape.val(loss_node)[0];
            if (!std::isfinite(loss))
                throw std::runtime_error("lnn_train: non-finite loss at epoch " + std::to_string(epoch));
            epoch_loss += loss * static_cast<double>(end - begin);

            tape.backward(loss_node);
            std::vector<Matrix> grads{tape.grad(p.w_in), tape.grad(p.w_rec), tape.grad(p.b),
                                      tape.grad(p.w_out), tape.grad(p.b_out)};
            opt.step({&cell.w_in, &cell.w_rec, &cell.b, &cell.w_out, &cell.b_out}, grads);
        }
        report.epoch_loss.push_back(epoch_loss / static_cast<double>(batch.size()));
    }
    return report;
}

}  // namespace echelon
