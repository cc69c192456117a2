#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "echelon/autodiff.hpp"
#include "echelon/matrix.hpp"
#include "echelon/optim.hpp"
#include "echelon/rng.hpp"

namespace echelon {

/// Two-hidden-layer ReLU MLP used for Q-value heads.
struct Mlp {
    Matrix w1, b1, w2, b2, w3, b3;

    void init(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
        w1 = xavier_init(hidden, in, rng);
        b1 = Matrix(hidden, 1);
        w2 = xavier_init(hidden, hidden, rng);
        b2 = Matrix(hidden, 1);
        w3 = xavier_init(out, hidden, rng);
        b3 = Matrix(out, 1);
    }

    std::vector<double> forward(const std::vector<double>& x) const {
        const auto layer = [](const Matrix& w, const Matrix& b, const std::vector<double>& v,
                              bool relu) {
            std::vector<double> out(w.rows());
            for (std::size_t i = 0; i < w.rows(); ++i) {
                double s = b(i, 0);
                for (std::size_t j = 0; j < w.cols(); ++j) s += w(i, j) * v[j];
                out[i] = relu && s < 0.0 ? 0.0 : s;
            }
            return out;
        };
        return layer(w3, b3, layer(w2, b2, layer(w1, b1, x, true), true), false);
    }
};

struct Transition {
    std::vector<double> state;
    int action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

/// Fixed-capacity ring buffer of transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % capacity_;
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& operator[](std::size_t i) const { return data_[i]; }

private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<Transition> data_;
};

/// Q-learning agent over a discrete grid of order quantities
/// {0, batch, 2*batch, ...}. Epsilon-greedy behaviour, experience replay and a
/// periodically hard-copied target network.
class DqnAgent {
public:
    DqnAgent(std::size_t state_dim, std::size_t hidden, int n_actions, int order_unit, Rng rng,
             double lr = 1e-3, double gamma = 0.99, int target_period = 100, int minibatch = 8,
             std::size_t buffer_capacity = 20000)
        : state_dim_(state_dim),
          n_actions_(n_actions),
          order_unit_(order_unit),
          gamma_(gamma),
          target_period_(target_period),
          minibatch_(minibatch),
          buffer_(buffer_capacity),
          rng_(rng),
          opt_(lr, 0.0) {
        q_.init(state_dim, hidden, static_cast<std::size_t>(n_actions), rng_);
        target_ = q_;
    }

    int n_actions() const { return n_actions_; }
    double order_for_action(int a) const { return static_cast<double>(a * order_unit_); }
    ReplayBuffer& buffer() { return buffer_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    double gamma() const { return gamma_; }
    Mlp& q_network() { return q_; }
    const Mlp& q_network() const { return q_; }

    /// Epsilon-greedy action index; greedy ties resolve to the smallest order.
    int act(const std::vector<double>& state, double eps, Rng& rng) const {
        if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("DqnAgent::act: eps out of range");
        if (eps > 0.0 && rng.uniform() < eps)
            return static_cast<int>(rng.uniform_int(0, n_actions_ - 1));
        const std::vector<double> qv = q_.forward(state);
        int best = 0;
        for (int a = 1; a < n_actions_; ++a)
            if (qv[static_cast<std::size_t>(a)] > qv[static_cast<std::size_t>(best)]) best = a;
        return best;
    }

    void remember(Transition t) { buffer_.push(std::move(t)); }

    /// One TD step on a replay minibatch:
    ///   y = r                         if terminal
    ///   y = r + gamma * max_a' Q_target(s', a')   otherwise
    /// Returns the minibatch MSE, or NaN when the buffer is still warming up.
    double train_step() {
        if (buffer_.size() < static_cast<std::size_t>(minibatch_)) return std::nan("");

        ad::Tape tape;
        struct Nodes {
            ad::Tape::NodeId w1, b1, w2, b2, w3, b3;
        } p{tape.leaf(q_.w1), tape.leaf(q_.b1), tape.leaf(q_.w2),
            tape.leaf(q_.b2), tape.leaf(q_.w3), tape.leaf(q_.b3)};

        ad::Tape::NodeId total = -1;
        for (int k = 0; k < minibatch_; ++k) {
            const auto idx =
                static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(buffer_.size()) - 1));
            const Transition& tr = buffer_[idx];

            double y = tr.reward;
            if (!tr.terminal) {
                const std::vector<double> tq = target_.forward(tr.next_state);
                double best = tq[0];
                for (double v : tq) best = std::max(best, v);
                y += gamma_ * best;
            }

            Matrix xm(state_dim_, 1);
            for (std::size_t j = 0; j < state_dim_; ++j) xm(j, 0) = tr.state[j];
            const auto x = tape.leaf(std::move(xm));
            const auto h1 = tape.relu(tape.add(tape.matmul(p.w1, x), p.b1));
            const auto h2 = tape.relu(tape.add(tape.matmul(p.w2, h1), p.b2));
            const auto qs = tape.add(tape.matmul(p.w3, h2), p.b3);
            const auto qa = tape.slice_rows(qs, static_cast<std::size_t>(tr.action), 1);
            Matrix ym(1, 1);
            ym(0, 0) = y;
            const auto loss = tape.square(tape.sub(qa, tape.leaf(std::move(ym))));
            total = total < 0 ? loss : tape.add(total, loss);
        }
        const auto loss_node = tape.scale(total, 1.0 / static_cast<double>(minibatch_));
        const double loss = tape.val(loss_node)[0];
        tape.backward(loss_node);

        std::vector<Matrix> grads{tape.grad(p.w1), tape.grad(p.b1), tape.grad(p.w2),
                                  tape.grad(p.b2), tape.grad(p.w3), tape.grad(p.b3)};
        opt_.step({&q_.w1, &q_.b1, &q_.w2, &q_.b2, &q_.w3, &q_.b3}, grads);

        ++steps_;
        if (steps_ % target_period_ == 0) target_ = q_;
        return loss;
    }

private:
    std::size_t state_dim_;
    int n_actions_;
    int order_unit_;
    double gamma_;
    int target_period_;
    int minibatch_;
    ReplayBuffer buffer_;
    Rng rng_;
    AdamW opt_;
    Mlp q_, target_;
    long steps_ = 0;
};

/// Linear schedule from eps_start to eps_end across total_steps.
inline double epsilon_at(long step, long total_steps, double eps_start = 1.0,
                         double eps_end = 0.1) {
    if (total_steps <= 1) return eps_end;
    const double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps - 1));
    return eps_end + (1.0 - f) * (eps_start - eps_end);
}

}  // namespace echelon
