#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "saqn/activations.hpp"
#include "saqn/errors.hpp"
#include "saqn/matrix.hpp"
#include "saqn/online_stats.hpp"
#include "saqn/optimizer.hpp"
#include "saqn/rng.hpp"
#include "saqn/weight_init.hpp"

namespace saqn {

/// Per-feature linear rescaling of raw observations into the range the
/// reconstruction activation can actually reach: [-1,1] for tanh, [0,1] for
/// sigmoid/relu. Values are clamped to the configured bounds first. An empty
/// scaler is the identity.
struct FeatureScaler {
    std::vector<double> lo;
    std::vector<double> hi;
    double out_lo = -1.0;
    double out_hi = 1.0;

    static FeatureScaler identity() { return FeatureScaler{}; }

    static FeatureScaler for_activation(std::vector<double> lo_in, std::vector<double> hi_in,
                                        Activation act) {
        FeatureScaler s;
        s.lo = std::move(lo_in);
        s.hi = std::move(hi_in);
        if (s.lo.size() != s.hi.size()) {
            throw DimensionError("FeatureScaler: lo/hi length mismatch " +
                                 std::to_string(s.lo.size()) + " vs " +
                                 std::to_string(s.hi.size()));
        }
        for (std::size_t i = 0; i < s.lo.size(); ++i) {
            if (!(s.lo[i] < s.hi[i])) {
                throw DomainError("FeatureScaler: bounds must satisfy lo < hi at feature " +
                                  std::to_string(i));
            }
        }
        if (act == Activation::Tanh) {
            s.out_lo = -1.0;
            s.out_hi = 1.0;
        } else {
            s.out_lo = 0.0;
            s.out_hi = 1.0;
        }
        return s;
    }

    bool is_identity() const { return lo.empty(); }

    std::vector<double> apply(const std::vector<double>& raw) const {
        if (is_identity()) return raw;
        if (raw.size() != lo.size()) {
            throw DimensionError("FeatureScaler: input width " + std::to_string(raw.size()) +
                                 " vs bounds width " + std::to_string(lo.size()));
        }
        std::vector<double> out(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            double v = raw[i];
            if (v < lo[i]) v = lo[i];
            if (v > hi[i]) v = hi[i];
            out[i] = out_lo + (v - lo[i]) / (hi[i] - lo[i]) * (out_hi - out_lo);
        }
        return out;
    }
};

/// Constants of the grow/prune inequalities. The prune multiplier 2 exists to
/// avoid pruning immediately after growing.
struct RegulatoryConstants {
    double alpha_bias = 1.3;
    double beta_bias = 1.0;
    double alpha_var = 1.3;
    double beta_var = 0.7;
    double prune_multiplier = 2.0;
};

/// Online statistics that drive hidden-unit evolution: per-feature input
/// stream stats feeding the Gaussian pre-activation model, plus running and
/// minimum mean/std of the per-sample bias^2 and variance estimates.
struct RegulatoryTracker {
    std::vector<OnlineStats> input_stats;
    OnlineStats bias_stats;
    OnlineStats var_stats;
    double min_bias_mean = std::numeric_limits<double>::infinity();
    double min_bias_std = std::numeric_limits<double>::infinity();
    double min_var_mean = std::numeric_limits<double>::infinity();
    double min_var_std = std::numeric_limits<double>::infinity();
    bool grew_flag = false;
    std::int64_t variance_clamps = 0;

    explicit RegulatoryTracker(std::size_t input_dim = 0) : input_stats(input_dim) {}

    std::int64_t samples_seen() const {
        return input_stats.empty() ? 0 : input_stats.front().count;
    }

    void observe_input(const std::vector<double>& x) {
        if (x.size() != input_stats.size()) {
            throw DimensionError("RegulatoryTracker: input width " + std::to_string(x.size()) +
                                 " vs " + std::to_string(input_stats.size()));
        }
        for (std::size_t i = 0; i < x.size(); ++i) input_stats[i].update(x[i]);
    }

    /// Record one bias^2 / variance observation and lower the running minima.
    void observe_bias_variance(double bias_sq, double variance) {
        bias_stats.update(bias_sq);
        var_stats.update(variance);
        min_bias_mean = std::min(min_bias_mean, bias_stats.mean);
        min_bias_std = std::min(min_bias_std, bias_stats.stddev());
        min_var_mean = std::min(min_var_mean, var_stats.mean);
        min_var_std = std::min(min_var_std, var_stats.stddev());
    }

    void reset_bias_minima() {
        min_bias_mean = bias_stats.mean;
        min_bias_std = bias_stats.stddev();
    }

    void reset_var_minima() {
        min_var_mean = var_stats.mean;
        min_var_std = var_stats.stddev();
    }
};

/// d1 = alpha * exp(-bias^2) + beta; d2 = alpha * exp(-(variance)^2) + beta.
/// The variance enters its exponent squared while the bias term is already
/// the squared quantity -- asymmetric, but implemented as published.
inline std::pair<double, double> dynamic_constants(double bias_sq, double variance,
                                                   const RegulatoryConstants& k) {
    const double d1 = k.alpha_bias * std::exp(-bias_sq) + k.beta_bias;
    const double d2 = k.alpha_var * std::exp(-(variance * variance)) + k.beta_var;
    return {d1, d2};
}

/// Growth test: mu_bias + sigma_bias >= mu_bias_min + d1 * sigma_bias_min
/// (inclusive). High running bias relative to the best seen means the net is
/// underfitting.
inline bool should_grow(const RegulatoryTracker& t, double d1) {
    return t.bias_stats.mean + t.bias_stats.stddev() >= t.min_bias_mean + d1 * t.min_bias_std;
}

/// Prune test: mu_var + sigma_var >= mu_var_min + 2*d2 * sigma_var_min,
/// blocked in the same step as a grow and at minimal width.
inline bool should_prune(const RegulatoryTracker& t, double d2, std::size_t r,
                         double prune_multiplier = 2.0) {
    if (t.grew_flag || r <= 1) return false;
    return t.var_stats.mean + t.var_stats.stddev() >=
           t.min_var_mean + prune_multiplier * d2 * t.min_var_std;
}

enum class EvolutionKind { Grow, Prune, Loss };

inline std::string to_string(EvolutionKind k) {
    switch (k) {
        case EvolutionKind::Grow: return "grow";
        case EvolutionKind::Prune: return "prune";
        case EvolutionKind::Loss: return "loss";
    }
    return "?";
}

/// One line of the evolution log. Numeric fields that do not apply to the
/// event kind are NaN and serialize as null.
struct EvolutionEvent {
    std::int64_t step = 0;
    EvolutionKind kind = EvolutionKind::Loss;
    std::size_t width = 0;
    double loss = std::numeric_limits<double>::quiet_NaN();
    double bias_sq = std::numeric_limits<double>::quiet_NaN();
    double variance = std::numeric_limits<double>::quiet_NaN();
    double d1 = std::numeric_limits<double>::quiet_NaN();
    double d2 = std::numeric_limits<double>::quiet_NaN();
};

struct PretrainOptions {
    std::int64_t max_steps = 1000;
    std::size_t batch_size = 16;
    bool evolve = true;
    RegulatoryConstants constants{};
    FeatureScaler scaler = FeatureScaler::identity();
    bool log_losses = true;
};

struct PretrainResult {
    std::vector<EvolutionEvent> log;
    std::int64_t grow_events = 0;
    std::int64_t prune_events = 0;
    std::int64_t variance_clamps = 0;
    double final_loss = 0.0;
};

enum class AeOptimizerKind { Sgd, Adam };

/// Tied-weight single-hidden-layer autoencoder whose width r can change
/// during pre-training:
///
///   L = g(x W + a),  x_hat = g(L W^T + b),  W in R^{d x r}.
///
/// Growing appends one column of W plus one entry of a (Xavier-uniform);
/// pruning removes the unit with the smallest expected activation. Optimizer
/// moment state is resized in lockstep so it always matches the parameters.
class EvolvingAutoencoder {
public:
    EvolvingAutoencoder(std::size_t input_dim, std::size_t initial_width, Activation act,
                        SeededRng& rng, double learning_rate = 0.01,
                        AeOptimizerKind opt = AeOptimizerKind::Sgd)
        : d_(input_dim),
          activation_(act),
          w_(xavier_uniform_matrix(input_dim, std::max<std::size_t>(initial_width, 1), rng)),
          a_(1, std::max<std::size_t>(initial_width, 1)),
          b_(1, input_dim),
          opt_kind_(opt),
          adam_w_(input_dim, w_.cols()),
          adam_a_(1, w_.cols()),
          adam_b_(1, input_dim) {
        if (input_dim == 0) throw DomainError("EvolvingAutoencoder: input_dim must be >= 1");
        const auto bias_init = xavier_uniform_row(input_dim, w_.cols(), w_.cols(), rng);
        for (std::size_t j = 0; j < w_.cols(); ++j) a_(0, j) = bias_init[j];
        sgd_.lr = learning_rate;
        adam_.lr = learning_rate;
    }

    std::size_t input_dim() const { return d_; }
    std::size_t width() const { return w_.cols(); }
    Activation activation() const { return activation_; }
    const Matrix& weights() const { return w_; }
    const Matrix& hidden_bias() const { return a_; }
    const Matrix& output_bias() const { return b_; }
    const AdamSlot& adam_weight_slot() const { return adam_w_; }
    const AdamSlot& adam_hidden_bias_slot() const { return adam_a_; }

    Matrix& mutable_weights() { return w_; }
    Matrix& mutable_hidden_bias() { return a_; }
    Matrix& mutable_output_bias() { return b_; }

    /// Latent code for one input row; the half of forward the Q-Network uses.
    Matrix encode(const Matrix& x) const {
        check_input(x);
        Matrix z = matmul(x, w_);
        add_row_vector(z, a_);
        return activate(z, activation_);
    }

    std::pair<Matrix, Matrix> forward(const Matrix& x) const {
        check_input(x);
        Matrix z1 = matmul(x, w_);
        add_row_vector(z1, a_);
        Matrix latent = activate(z1, activation_);
        Matrix z2 = matmul_transB(latent, w_);
        add_row_vector(z2, b_);
        return {std::move(latent), activate(z2, activation_)};
    }

    /// Gaussian model of the hidden pre-activations from the input stream
    /// statistics, assuming independent features:
    ///   mu_j = sum_i mean_i W_ij + a_j,  var_j = sum_i var_i W_ij^2.
    std::pair<Matrix, Matrix> preactivation_stats(const RegulatoryTracker& t) const {
        if (t.samples_seen() < 1) {
            throw StateError("preactivation_stats: tracker has seen no inputs");
        }
        if (t.input_stats.size() != d_) {
            throw DimensionError("preactivation_stats: tracker width " +
                                 std::to_string(t.input_stats.size()) + " vs input dim " +
                                 std::to_string(d_));
        }
        const std::size_t r = width();
        Matrix mu(1, r), var(1, r);
        for (std::size_t j = 0; j < r; ++j) {
            double m = a_(0, j);
            double v = 0.0;
            for (std::size_t i = 0; i < d_; ++i) {
                const double wij = w_(i, j);
                m += t.input_stats[i].mean * wij;
                v += t.input_stats[i].variance() * wij * wij;
            }
            mu(0, j) = m;
            var(0, j) = v;
        }
        return {std::move(mu), std::move(var)};
    }

    /// E[L] per hidden unit via the probit closed form. No closed form exists
    /// for relu, so relu nets cannot drive evolution.
    Matrix expected_latent(const Matrix& mu, const Matrix& var) const {
        require_same_shape(mu, var, "expected_latent");
        if (activation_ == Activation::Relu) {
            throw DomainError("expected_latent: no closed-form expectation for relu");
        }
        Matrix out(1, mu.cols());
        for (std::size_t j = 0; j < mu.cols(); ++j) {
            out(0, j) = activation_ == Activation::Tanh
                            ? probit_expectation_tanh(mu(0, j), var(0, j))
                            : probit_expectation_sigmoid(mu(0, j), var(0, j));
        }
        return out;
    }

    /// E[x_hat] = g(E[L] W^T + b) and E[x_hat^2] = g(E[L]^2 W^T + b), the
    /// second using the elementwise square of the expected latent.
    std::pair<Matrix, Matrix> expected_outputs(const Matrix& expected_l) const {
        if (expected_l.rows() != 1 || expected_l.cols() != width()) {
            throw DimensionError("expected_outputs: E[L] " + expected_l.shape_str() +
                                 " vs width " + std::to_string(width()));
        }
        Matrix z = matmul_transB(expected_l, w_);
        add_row_vector(z, b_);
        Matrix ex = activate(z, activation_);

        Matrix el_sq = expected_l;
        for (std::size_t j = 0; j < el_sq.cols(); ++j) el_sq(0, j) *= el_sq(0, j);
        Matrix z2 = matmul_transB(el_sq, w_);
        add_row_vector(z2, b_);
        return {std::move(ex), activate(z2, activation_)};
    }

    /// Appends one hidden unit (Xavier column of W + one entry of a), resets
    /// the bias minima and raises the grew flag. Existing weights untouched.
    void grow_node(RegulatoryTracker& tracker, SeededRng& rng) {
        const std::size_t r_new = width() + 1;
        w_.append_col(xavier_uniform_row(d_, r_new, d_, rng));
        a_.append_col(xavier_uniform_row(d_, r_new, 1, rng));
        adam_w_.append_col();
        adam_a_.append_col();
        tracker.reset_bias_minima();
        tracker.grew_flag = true;
    }

    /// Removes the hidden unit with minimal E[L] (ties to the lowest index)
    /// and resets the variance minima.
    std::size_t prune_node(RegulatoryTracker& tracker) {
        if (width() <= 1) throw StateError("prune_node: cannot prune below width 1");
        auto [mu, var] = preactivation_stats(tracker);
        const Matrix el = expected_latent(mu, var);
        std::size_t worst = 0;
        for (std::size_t j = 1; j < el.cols(); ++j) {
            if (el(0, j) < el(0, worst)) worst = j;
        }
        w_.remove_col(worst);
        a_.remove_col(worst);
        adam_w_.remove_col(worst);
        adam_a_.remove_col(worst);
        tracker.reset_var_minima();
        return worst;
    }

    /// One gradient step on the mean squared reconstruction error of a batch.
    /// W receives the sum of its encoder and decoder (tied) contributions.
    /// Returns the pre-update loss.
    double reconstruction_step(const Matrix& batch) {
        if (batch.rows() == 0) throw InputError("reconstruction_step: empty batch");
        if (batch.cols() != d_) {
            throw DimensionError("reconstruction_step: batch " + batch.shape_str() +
                                 " vs input dim " + std::to_string(d_));
        }
        const std::size_t n = batch.rows();
        const double scale = 1.0 / static_cast<double>(n * d_);

        Matrix z1 = matmul(batch, w_);
        add_row_vector(z1, a_);
        Matrix latent = activate(z1, activation_);
        Matrix z2 = matmul_transB(latent, w_);
        add_row_vector(z2, b_);
        Matrix recon = activate(z2, activation_);

        double loss = 0.0;
        Matrix dz2 = z2;  // reuse shape; overwritten below
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d_; ++j) {
                const double err = recon(i, j) - batch(i, j);
                loss += err * err;
                dz2(i, j) = 2.0 * err * scale * activate_deriv_scalar(z2(i, j), activation_);
            }
        }
        loss *= scale;

        Matrix grad_b = col_sums(dz2);
        Matrix grad_w = matmul_transA(dz2, latent);  // decoder contribution, d x r
        Matrix dlatent = matmul(dz2, w_);
        Matrix dz1 = z1;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < width(); ++j) {
                dz1(i, j) = dlatent(i, j) * activate_deriv_scalar(z1(i, j), activation_);
            }
        }
        Matrix grad_a = col_sums(dz1);
        axpy(grad_w, 1.0, matmul_transA(batch, dz1));  // encoder contribution

        apply_gradients(grad_w, grad_a, grad_b);
        return loss;
    }

    /// Per-sample regulation pass of the pre-training loop: update stream
    /// statistics, estimate bias^2/variance through the expectation chain,
    /// then grow or prune according to the threshold tests.
    void regulate_sample(const std::vector<double>& x, RegulatoryTracker& tracker,
                         const RegulatoryConstants& k, SeededRng& rng, std::int64_t step,
                         std::vector<EvolutionEvent>* log) {
        tracker.observe_input(x);
        auto [mu, var] = preactivation_stats(tracker);
        const Matrix el = expected_latent(mu, var);
        auto [ex, ex2] = expected_outputs(el);
        auto [bias_sq, variance] = bias_variance(x, ex, ex2, &tracker.variance_clamps);
        tracker.observe_bias_variance(bias_sq, variance);
        const auto [d1, d2] = dynamic_constants(bias_sq, variance, k);

        if (should_grow(tracker, d1)) {
            grow_node(tracker, rng);
            if (log) {
                log->push_back({step, EvolutionKind::Grow, width(),
                                std::numeric_limits<double>::quiet_NaN(), bias_sq, variance, d1,
                                d2});
            }
        } else {
            tracker.grew_flag = false;
        }
        if (should_prune(tracker, d2, width(), k.prune_multiplier)) {
            prune_node(tracker);
            if (log) {
                log->push_back({step, EvolutionKind::Prune, width(),
                                std::numeric_limits<double>::quiet_NaN(), bias_sq, variance, d1,
                                d2});
            }
        }
    }

    /// Reconstruction-error decomposition against the current sample:
    /// bias^2 = mean_d (E[x_hat] - x)^2, variance = mean_d max(E[x_hat^2] -
    /// E[x_hat]^2, 0). The clamp exists because the approximation chain can
    /// push the moment difference slightly negative.
    static std::pair<double, double> bias_variance(const std::vector<double>& x, const Matrix& ex,
                                                   const Matrix& ex2,
                                                   std::int64_t* clamp_counter = nullptr) {
        if (ex.cols() != x.size() || !ex.same_shape(ex2)) {
            throw DimensionError("bias_variance: widths " + std::to_string(x.size()) + ", " +
                                 ex.shape_str() + ", " + ex2.shape_str());
        }
        double bias_acc = 0.0, var_acc = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double diff = ex(0, j) - x[j];
            bias_acc += diff * diff;
            double v = ex2(0, j) - ex(0, j) * ex(0, j);
            if (v < 0.0) {
                v = 0.0;
                if (clamp_counter) ++(*clamp_counter);
            }
            var_acc += v;
        }
        const double inv = 1.0 / static_cast<double>(x.size());
        return {bias_acc * inv, var_acc * inv};
    }

    bool parameters_finite() const { return w_.all_finite() && a_.all_finite() && b_.all_finite(); }

private:
    void check_input(const Matrix& x) const {
        if (x.rows() != 1 || x.cols() != d_) {
            throw DimensionError("autoencoder input " + x.shape_str() + " vs expected 1x" +
                                 std::to_string(d_));
        }
    }

    void apply_gradients(const Matrix& grad_w, const Matrix& grad_a, const Matrix& grad_b) {
        if (opt_kind_ == AeOptimizerKind::Sgd) {
            sgd_.step(w_, grad_w);
            sgd_.step(a_, grad_a);
            sgd_.step(b_, grad_b);
        } else {
            adam_.begin_step();
            adam_.step(adam_w_, w_, grad_w);
            adam_.step(adam_a_, a_, grad_a);
            adam_.step(adam_b_, b_, grad_b);
        }
    }

    std::size_t d_;
    Activation activation_;
    Matrix w_;  // d x r, decoder uses the transpose
    Matrix a_;  // 1 x r hidden bias
    Matrix b_;  // 1 x d output bias
    AeOptimizerKind opt_kind_;
    SgdOptimizer sgd_;
    AdamOptimizer adam_;
    AdamSlot adam_w_;
    AdamSlot adam_a_;
    AdamSlot adam_b_;
};

/// Full pre-training loop: batches are consumed in stream order (cycling
/// through the memory), per-sample statistics drive grow/prune, and each
/// batch takes one reconstruction gradient step.
inline PretrainResult pretrain(EvolvingAutoencoder& ae,
                               const std::vector<std::vector<double>>& observation_memory,
                               const PretrainOptions& options, SeededRng& rng,
                               RegulatoryTracker* tracker_out = nullptr) {
    if (observation_memory.empty()) throw InputError("pretrain: observation memory is empty");
    if (options.max_steps < 1) throw InputError("pretrain: max_steps must be >= 1");
    if (options.batch_size < 1) throw InputError("pretrain: batch_size must be >= 1");

    std::vector<std::vector<double>> normalized;
    normalized.reserve(observation_memory.size());
    for (const auto& raw : observation_memory) normalized.push_back(options.scaler.apply(raw));

    RegulatoryTracker tracker(ae.input_dim());
    PretrainResult result;
    std::size_t cursor = 0;
    const std::size_t n = normalized.size();

    for (std::int64_t step = 1; step <= options.max_steps; ++step) {
        std::vector<const std::vector<double>*> batch_rows(options.batch_size);
        for (std::size_t k = 0; k < options.batch_size; ++k) {
            batch_rows[k] = &normalized[(cursor + k) % n];
        }
        cursor = (cursor + options.batch_size) % n;

        if (options.evolve) {
            for (const auto* x : batch_rows) {
                ae.regulate_sample(*x, tracker, options.constants, rng, step, &result.log);
            }
        }

        Matrix batch(options.batch_size, ae.input_dim());
        for (std::size_t k = 0; k < options.batch_size; ++k) {
            for (std::size_t j = 0; j < ae.input_dim(); ++j) batch(k, j) = (*batch_rows[k])[j];
        }
        const double loss = ae.reconstruction_step(batch);
        result.final_loss = loss;
        if (options.log_losses) {
            EvolutionEvent ev;
            ev.step = step;
            ev.kind = EvolutionKind::Loss;
            ev.width = ae.width();
            ev.loss = loss;
            result.log.push_back(ev);
        }
    }

    for (const auto& ev : result.log) {
        if (ev.kind == EvolutionKind::Grow) ++result.grow_events;
        if (ev.kind == EvolutionKind::Prune) ++result.prune_events;
    }
    result.variance_clamps = tracker.variance_clamps;
    if (tracker_out) *tracker_out = tracker;
    return result;
}

}  // namespace saqn
