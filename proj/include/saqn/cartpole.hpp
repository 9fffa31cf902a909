#pragma once

#include <cmath>
#include <vector>

#include "saqn/env.hpp"
#include "saqn/errors.hpp"

namespace saqn {

/// Classic cart-pole balancing task. Observation is (x, x_dot, theta,
/// theta_dot); two actions push the cart left or right with a fixed force.
/// The episode ends when the pole tips more than 15 degrees, the cart leaves
/// +-2.4 units, or 200 steps elapse. Reward is +1 on every step.
class CartPoleEnv final : public Environment {
public:
    struct State {
        double x = 0.0;
        double x_dot = 0.0;
        double theta = 0.0;
        double theta_dot = 0.0;
    };

    // Physics constants: the standard benchmark values, integrated with a
    // plain (forward) Euler step of tau seconds.
    static constexpr double kGravity = 9.8;
    static constexpr double kMassCart = 1.0;
    static constexpr double kMassPole = 0.1;
    static constexpr double kPoleHalfLength = 0.5;
    static constexpr double kForceMag = 10.0;
    static constexpr double kTau = 0.02;
    static constexpr double kThetaThreshold = 15.0 * 3.14159265358979323846 / 180.0;
    static constexpr double kXThreshold = 2.4;
    static constexpr int kMaxSteps = 200;

    /// One Euler step of the dynamics under an arbitrary horizontal force.
    /// Positions advance with the pre-step velocities.
    static State integrate(const State& s, double force) {
        const double total_mass = kMassCart + kMassPole;
        const double polemass_length = kMassPole * kPoleHalfLength;
        const double cos_t = std::cos(s.theta);
        const double sin_t = std::sin(s.theta);
        const double temp =
            (force + polemass_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
        const double theta_acc = (kGravity * sin_t - cos_t * temp) /
                                 (kPoleHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / total_mass));
        const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;
        State next;
        next.x = s.x + kTau * s.x_dot;
        next.x_dot = s.x_dot + kTau * x_acc;
        next.theta = s.theta + kTau * s.theta_dot;
        next.theta_dot = s.theta_dot + kTau * theta_acc;
        return next;
    }

    static bool is_failure(const State& s) {
        return std::abs(s.x) > kXThreshold || std::abs(s.theta) > kThetaThreshold;
    }

    std::vector<double> reset(SeededRng& rng) override {
        state_.x = rng.uniform(-0.05, 0.05);
        state_.x_dot = rng.uniform(-0.05, 0.05);
        state_.theta = rng.uniform(-0.05, 0.05);
        state_.theta_dot = rng.uniform(-0.05, 0.05);
        steps_ = 0;
        done_ = false;
        return observation();
    }

    EnvStep step(int action) override {
        if (done_) throw StateError("CartPoleEnv::step called on a finished episode");
        if (action != 0 && action != 1) {
            throw InputError("CartPoleEnv: action must be 0 (left) or 1 (right)");
        }
        const double force = action == 1 ? kForceMag : -kForceMag;
        state_ = integrate(state_, force);
        ++steps_;
        done_ = is_failure(state_) || steps_ >= kMaxSteps;
        return {observation(), 1.0, done_};
    }

    std::size_t observation_dim() const override { return 4; }
    int action_count() const override { return 2; }
    bool done() const override { return done_; }

    const State& state() const { return state_; }

    /// Test hook: place the cart-pole in an arbitrary state.
    void set_state(const State& s) {
        state_ = s;
        steps_ = 0;
        done_ = is_failure(s);
    }

    std::vector<double> observation() const {
        return {state_.x, state_.x_dot, state_.theta, state_.theta_dot};
    }

private:
    State state_{};
    int steps_ = 0;
    bool done_ = true;  // must reset before stepping
};

/// Latent-dump category for a raw cart-pole state, following the three
/// angle classes used for the latent-space scatter plots.
inline const char* cartpole_state_label(const std::vector<double>& raw) {
    const double theta = raw.at(2);
    if (theta < -CartPoleEnv::kThetaThreshold) return "left-exceed";
    if (theta > CartPoleEnv::kThetaThreshold) return "right-exceed";
    return "in-bounds";
}

}  // namespace saqn
