#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "saqn/activations.hpp"
#include "saqn/errors.hpp"
#include "saqn/matrix.hpp"
#include "saqn/optimizer.hpp"
#include "saqn/replay.hpp"
#include "saqn/rng.hpp"
#include "saqn/weight_init.hpp"

namespace saqn {

/// Two-layer action-value approximator: input -> hidden (tanh or sigmoid)
/// -> linear Q-values, one output per action. The hidden layer defaults to
/// 256 units. Trained with Adam on the squared TD error.
class QNetwork {
public:
    QNetwork(std::size_t input_dim, std::size_t hidden, std::size_t n_actions, Activation act,
             SeededRng& rng, double learning_rate = 1e-3)
        : input_dim_(input_dim),
          n_actions_(n_actions),
          activation_(act),
          w1_(xavier_uniform_matrix(input_dim, hidden, rng)),
          b1_(1, hidden),
          w2_(xavier_uniform_matrix(hidden, n_actions, rng)),
          b2_(1, n_actions),
          slot_w1_(input_dim, hidden),
          slot_b1_(1, hidden),
          slot_w2_(hidden, n_actions),
          slot_b2_(1, n_actions) {
        if (input_dim == 0 || hidden == 0 || n_actions == 0) {
            throw DomainError("QNetwork: all dimensions must be >= 1");
        }
        adam_.lr = learning_rate;
    }

    std::size_t input_dim() const { return input_dim_; }
    std::size_t n_actions() const { return n_actions_; }
    std::size_t hidden_units() const { return w1_.cols(); }

    Matrix& mutable_w1() { return w1_; }
    Matrix& mutable_b1() { return b1_; }
    Matrix& mutable_w2() { return w2_; }
    Matrix& mutable_b2() { return b2_; }
    const Matrix& w2() const { return w2_; }

    std::vector<double> q_values(const std::vector<double>& state) const {
        if (state.size() != input_dim_) {
            throw DimensionError("QNetwork: state width " + std::to_string(state.size()) +
                                 " vs input dim " + std::to_string(input_dim_));
        }
        Matrix s(1, input_dim_, std::vector<double>(state));
        const Matrix q = forward(s).q;
        return {q.values().begin(), q.values().end()};
    }

    struct Forward {
        Matrix z1;
        Matrix h;
        Matrix q;
    };

    Forward forward(const Matrix& states) const {
        Matrix z1 = matmul(states, w1_);
        add_row_vector(z1, b1_);
        Matrix h = activate(z1, activation_);
        Matrix q = matmul(h, w2_);
        add_row_vector(q, b2_);
        return {std::move(z1), std::move(h), std::move(q)};
    }

    struct Gradients {
        double loss = 0.0;
        Matrix w1, b1, w2, b2;
    };

    /// Bellman targets for a batch, computed with the (frozen) target
    /// network. Terminal transitions take the bare reward.
    std::vector<double> batch_targets(const QNetwork& target,
                                      const std::vector<const Transition*>& batch,
                                      double gamma) const {
        const std::size_t n = batch.size();
        Matrix next_states(n, input_dim_);
        for (std::size_t i = 0; i < n; ++i) {
            const Transition& tr = *batch[i];
            if (tr.state.size() != input_dim_ || tr.next_state.size() != input_dim_) {
                throw DimensionError("batch_targets: transition width mismatch");
            }
            for (std::size_t j = 0; j < input_dim_; ++j) next_states(i, j) = tr.next_state[j];
        }
        const Matrix next_q = target.forward(next_states).q;
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Transition& tr = *batch[i];
            if (tr.done) {
                y[i] = tr.reward;
            } else {
                double best = next_q(i, 0);
                for (std::size_t a = 1; a < n_actions_; ++a) best = std::max(best, next_q(i, a));
                y[i] = tr.reward + gamma * best;
            }
        }
        return y;
    }

    /// Mean squared TD error over the batch plus its gradient w.r.t. the
    /// learning parameters only (targets are treated as constants).
    Gradients compute_gradients(const QNetwork& target,
                                const std::vector<const Transition*>& batch, double gamma) const {
        if (batch.empty()) throw InputError("compute_gradients: empty batch");
        const std::size_t n = batch.size();
        const std::vector<double> y = batch_targets(target, batch, gamma);

        Matrix states(n, input_dim_);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < input_dim_; ++j) states(i, j) = batch[i]->state[j];
        }

        Forward fwd = forward(states);
        Gradients g;
        Matrix dq(n, n_actions_, 0.0);
        const double scale = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const int a = batch[i]->action;
            const double err = fwd.q(i, static_cast<std::size_t>(a)) - y[i];
            g.loss += err * err;
            dq(i, static_cast<std::size_t>(a)) = 2.0 * err * scale;
        }
        g.loss *= scale;

        g.w2 = matmul_transA(fwd.h, dq);
        g.b2 = col_sums(dq);
        Matrix dh = matmul_transB(dq, w2_);
        Matrix dz1 = fwd.z1;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < hidden_units(); ++j) {
                dz1(i, j) = dh(i, j) * activate_deriv_scalar(fwd.z1(i, j), activation_);
            }
        }
        g.w1 = matmul_transA(states, dz1);
        g.b1 = col_sums(dz1);
        return g;
    }

    /// One Adam step on the mean squared TD error of a batch. The target
    /// network is untouched. Returns the pre-update loss.
    double train_step(const QNetwork& target, const std::vector<const Transition*>& batch,
                      double gamma) {
        Gradients g = compute_gradients(target, batch, gamma);
        adam_.begin_step();
        adam_.step(slot_w1_, w1_, g.w1);
        adam_.step(slot_b1_, b1_, g.b1);
        adam_.step(slot_w2_, w2_, g.w2);
        adam_.step(slot_b2_, b2_, g.b2);
        return g.loss;
    }

    /// Deep copy of the learnable parameters from another network; the
    /// target-sync primitive.
    void copy_parameters_from(const QNetwork& other) {
        w1_ = other.w1_;
        b1_ = other.b1_;
        w2_ = other.w2_;
        b2_ = other.b2_;
    }

private:
    std::size_t input_dim_;
    std::size_t n_actions_;
    Activation activation_;
    Matrix w1_, b1_, w2_, b2_;
    AdamOptimizer adam_;
    AdamSlot slot_w1_, slot_b1_, slot_w2_, slot_b2_;
};

/// Frozen parameter copy used for bootstrap targets, refreshed only at the
/// configured sync interval.
struct TargetNetwork {
    QNetwork net;

    explicit TargetNetwork(const QNetwork& source) : net(source) {}

    void sync(const QNetwork& source) { net.copy_parameters_from(source); }
};

/// Bellman target: r when terminal, else r + gamma * max_a Q(s', a; theta-).
inline double td_target(double reward, const std::vector<double>& next_state, bool done,
                        double gamma, const TargetNetwork& target) {
    if (done) return reward;
    const std::vector<double> q = target.net.q_values(next_state);
    return reward + gamma * *std::max_element(q.begin(), q.end());
}

/// Epsilon-greedy selection: greedy argmax (ties to the lowest index) with
/// probability 1-eps, otherwise uniform random.
inline int select_action(const std::vector<double>& q, double eps, SeededRng& rng) {
    if (q.empty()) throw InputError("select_action: empty Q-vector");
    if (rng.uniform01() < eps) return static_cast<int>(rng.uniform_int(q.size()));
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.size(); ++a) {
        if (q[a] > q[best]) best = a;
    }
    return static_cast<int>(best);
}

/// Linear epsilon decay from eps_start to eps_end over decay_steps
/// environment steps, clamped thereafter.
struct EpsilonSchedule {
    double eps_start = 1.0;
    double eps_end = 0.05;
    std::int64_t decay_steps = 10000;

    double value(std::int64_t step) const {
        if (decay_steps <= 0 || step >= decay_steps) return eps_end;
        if (step <= 0) return eps_start;
        const double f = static_cast<double>(step) / static_cast<double>(decay_steps);
        return eps_start + (eps_end - eps_start) * f;
    }
};

}  // namespace saqn
