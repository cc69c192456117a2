#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "echelon/autodiff.hpp"
#include "echelon/features.hpp"
#include "echelon/matrix.hpp"
#include "echelon/optim.hpp"
#include "echelon/rng.hpp"

namespace echelon {

/// Stacked LSTM with a linear readout from the last layer's final hidden
/// state. Gate rows are packed [input, forget, cell, output] in w_x/w_h/b.
struct LstmCell {
    int hidden = 64;
    int layers = 1;

    struct LayerParams {
        Matrix w_x;  // 4h x in
        Matrix w_h;  // 4h x h
        Matrix b;    // 4h x 1
    };
    std::vector<LayerParams> stack;
    Matrix w_out;  // kHorizon x h
    Matrix b_out;  // kHorizon x 1

    void init(Rng& rng) {
        stack.clear();
        const auto h = static_cast<std::size_t>(hidden);
        std::size_t in = kFeatureDim;
        for (int l = 0; l < layers; ++l) {
            LayerParams p;
            p.w_x = xavier_init(4 * h, in, rng);
            p.w_h = xavier_init(4 * h, h, rng);
            p.b = Matrix(4 * h, 1);
            stack.push_back(std::move(p));
            in = h;
        }
        w_out = xavier_init(kHorizon, h, rng);
        b_out = Matrix(kHorizon, 1);
    }

    std::size_t parameter_count() const {
        std::size_t n = w_out.size() + b_out.size();
        for (const auto& p : stack) n += p.w_x.size() + p.w_h.size() + p.b.size();
        return n;
    }
};

struct LstmTapeNodes {
    struct LayerNodes {
        ad::Tape::NodeId w_x, w_h, b;
    };
    std::vector<LayerNodes> stack;
    ad::Tape::NodeId w_out, b_out;
};

inline LstmTapeNodes lstm_leaves(ad::Tape& tape, const LstmCell& cell) {
    LstmTapeNodes nodes;
    for (const auto& p : cell.stack)
        nodes.stack.push_back({tape.leaf(p.w_x), tape.leaf(p.w_h), tape.leaf(p.b)});
    nodes.w_out = tape.leaf(cell.w_out);
    nodes.b_out = tape.leaf(cell.b_out);
    return nodes;
}

inline ad::Tape::NodeId lstm_forecast_node(ad::Tape& tape, const LstmTapeNodes& p,
                                           const LstmCell& cell,
                                           const std::array<FeatureVec, kWindowLen>& window) {
    const auto h = static_cast<std::size_t>(cell.hidden);
    std::vector<ad::Tape::NodeId> hs, cs;
    for (int l = 0; l < cell.layers; ++l) {
        hs.push_back(tape.leaf(Matrix(h, 1)));
        cs.push_back(tape.leaf(Matrix(h, 1)));
    }

    for (const FeatureVec& xv : window) {
        Matrix xm(kFeatureDim, 1);
        for (std::size_t j = 0; j < kFeatureDim; ++j) xm(j, 0) = xv[j];
        ad::Tape::NodeId x = tape.leaf(std::move(xm));
        for (int l = 0; l < cell.layers; ++l) {
            const auto& lp = p.stack[static_cast<std::size_t>(l)];
            const auto z = tape.add(
                tape.add(tape.matmul(lp.w_x, x), tape.matmul(lp.w_h, hs[static_cast<std::size_t>(l)])),
                lp.b);
            const auto gi = tape.sigmoid(tape.slice_rows(z, 0, h));
            const auto gf = tape.sigmoid(tape.slice_rows(z, h, h));
            const auto gc = tape.tanh(tape.slice_rows(z, 2 * h, h));
            const auto go = tape.sigmoid(tape.slice_rows(z, 3 * h, h));
            const auto c = tape.add(tape.mul(gf, cs[static_cast<std::size_t>(l)]), tape.mul(gi, gc));
            const auto hn = tape.mul(go, tape.tanh(c));
            cs[static_cast<std::size_t>(l)] = c;
            hs[static_cast<std::size_t>(l)] = hn;
            x = hn;
        }
    }
    return tape.add(tape.matmul(p.w_out, hs.back()), p.b_out);
}

/// Inference-path forecast (no tape).
inline Forecast lstm_forecast(const LstmCell& cell,
                              const std::array<FeatureVec, kWindowLen>& window) {
    ad::Tape tape;
    const auto p = lstm_leaves(tape, cell);
    const auto pred = lstm_forecast_node(tape, p, cell, window);
    Forecast out{};
    for (std::size_t k = 0; k < kHorizon; ++k) out[k] = tape.val(pred)(k, 0);
    return out;
}

/// Adam (decoupled decay 0) on MSE with per-step gradient clipping at
/// `clip_norm`; same minibatch scheme as lnn_train.
inline TrainReport lstm_train(LstmCell& cell, const WindowBatch& batch, int epochs, double lr,
                              int minibatch, Rng& rng, double clip_norm = 0.5) {
    if (batch.empty()) throw std::invalid_argument("lstm_train: empty batch");
    AdamW opt(lr, 0.0);
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
            const LstmTapeNodes p = lstm_leaves(tape, cell);
            ad::Tape::NodeId total = -1;
            for (std::size_t k = begin; k < end; ++k) {
                const WindowSample& sample = batch[order[k]];
                const auto pred = lstm_forecast_node(tape, p, cell, sample.x);
                Matrix tv(kHorizon, 1);
                for (std::size_t j = 0; j < kHorizon; ++j) tv(j, 0) = sample.y[j];
                const auto loss = ad::mse(tape, pred, tape.leaf(std::move(tv)));
                total = total < 0 ? loss : tape.add(total, loss);
            }
            const auto loss_node = tape.scale(total, 1.0 / static_cast<double>(end - begin));
            const double loss = tape.val(loss_node)[0];
            if (!std::isfinite(loss))
                throw std::runtime_error("lstm_train: non-finite loss at epoch " + std::to_string(epoch));
            epoch_loss += loss * static_cast<double>(end - begin);

            tape.backward(loss_node);
            std::vector<Matrix> grads;
            std::vector<Matrix*> params;
            for (int l = 0; l < cell.layers; ++l) {
                auto& lp = cell.stack[static_cast<std::size_t>(l)];
                const auto& tn = p.stack[static_cast<std::size_t>(l)];
                grads.push_back(tape.grad(tn.w_x));
                grads.push_back(tape.grad(tn.w_h));
                grads.push_back(tape.grad(tn.b));
                params.push_back(&lp.w_x);
                params.push_back(&lp.w_h);
                params.push_back(&lp.b);
            }
            grads.push_back(tape.grad(p.w_out));
            grads.push_back(tape.grad(p.b_out));
            params.push_back(&cell.w_out);
            params.push_back(&cell.b_out);

            clip_gradients(grads, clip_norm);
            opt.step(params, grads);
        }
        report.epoch_loss.push_back(epoch_loss / static_cast<double>(batch.size()));
    }
    return report;
}

}  // namespace echelon
