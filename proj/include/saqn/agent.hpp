#pragma once

#include <chrono>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "saqn/autoencoder.hpp"
#include "saqn/env.hpp"
#include "saqn/errors.hpp"
#include "saqn/q_network.hpp"
#include "saqn/replay.hpp"

namespace saqn {

enum class AgentKind { QN, AQN, SAQN };

inline std::string to_string(AgentKind k) {
    switch (k) {
        case AgentKind::QN: return "qn";
        case AgentKind::AQN: return "aqn";
        case AgentKind::SAQN: return "saqn";
    }
    return "?";
}

inline AgentKind agent_kind_from_string(const std::string& s) {
    if (s == "qn") return AgentKind::QN;
    if (s == "aqn") return AgentKind::AQN;
    if (s == "saqn") return AgentKind::SAQN;
    throw InputError("unknown agent kind '" + s + "' (expected qn|aqn|saqn)");
}

/// Pre-trained encoder plus its input scaler, frozen after pre-training.
/// Maps raw observations to latent state vectors for the Q-Network.
struct FrozenEncoder {
    FeatureScaler scaler;
    EvolvingAutoencoder ae;

    std::size_t latent_width() const { return ae.width(); }

    std::vector<double> encode(const std::vector<double>& raw) const {
        const Matrix z = ae.encode(Matrix::row(scaler.apply(raw)));
        return {z.values().begin(), z.values().end()};
    }
};

/// Per-episode training record; one CSV row.
struct EpisodeRecord {
    int episode = 0;
    double total_reward = 0.0;
    int steps = 0;
    double epsilon = 0.0;
    double wall_time_s = 0.0;
    double loss_mean = 0.0;
};

/// Training-loop knobs for the Q-Network side of the pipeline.
struct TrainOptions {
    double gamma = 0.99;
    EpsilonSchedule epsilon{};
    std::size_t replay_capacity = 50000;
    std::size_t batch_size = 64;
    std::int64_t train_interval = 1;
    std::int64_t sync_interval = 500;
    double learning_rate = 1e-3;
    std::size_t hidden_units = 256;
    Activation qn_activation = Activation::Tanh;
    int episode_budget = 500;
    std::optional<double> solve_threshold;  // early stop once rolling-100 reaches it
    bool concat_raw = false;                // feed [raw || latent] instead of latent only
};

/// Collects raw observations by acting uniformly at random (the discrete
/// stand-in for random exploratory movements), resetting whenever an episode
/// terminates. Records the observation produced by every step, terminal
/// states included, so the memory also contains failure states.
inline std::vector<std::vector<double>> collect_observations(Environment& env,
                                                             std::int64_t n_steps,
                                                             SeededRng& rng) {
    if (n_steps < 1) throw InputError("collect_observations: n_steps must be >= 1");
    std::vector<std::vector<double>> memory;
    memory.reserve(static_cast<std::size_t>(n_steps));
    env.reset(rng);
    for (std::int64_t i = 0; i < n_steps; ++i) {
        if (env.done()) env.reset(rng);
        const int action = static_cast<int>(rng.uniform_int(env.action_count()));
        EnvStep step = env.step(action);
        memory.push_back(std::move(step.observation));
    }
    return memory;
}

namespace detail {

inline std::vector<double> map_state(AgentKind kind, const FrozenEncoder* encoder,
                                     const std::vector<double>& raw, bool concat_raw) {
    if (kind == AgentKind::QN) return raw;
    std::vector<double> latent = encoder->encode(raw);
    if (!concat_raw) return latent;
    std::vector<double> both = raw;
    both.insert(both.end(), latent.begin(), latent.end());
    return both;
}

inline double rolling_mean_tail(const std::vector<EpisodeRecord>& records, std::size_t window) {
    double acc = 0.0;
    for (std::size_t i = records.size() - window; i < records.size(); ++i) {
        acc += records[i].total_reward;
    }
    return acc / static_cast<double>(window);
}

}  // namespace detail

/// Full agent training loop: epsilon-greedy interaction, replay storage of
/// mapped (raw or latent) states, periodic TD minimization and target syncs.
/// Stops at the episode budget, or earlier once the rolling-100 average
/// reward reaches the solve threshold.
inline std::vector<EpisodeRecord> train_agent(AgentKind kind, Environment& env,
                                              const FrozenEncoder* encoder,
                                              const TrainOptions& options, SeededRng& env_rng,
                                              SeededRng& agent_rng,
                                              std::ostream* trajectory_out = nullptr) {
    if (kind != AgentKind::QN && encoder == nullptr) {
        throw ConfigError("train_agent: " + to_string(kind) + " requires a pre-trained encoder");
    }

    std::vector<EpisodeRecord> records;
    if (options.episode_budget <= 0) return records;

    const std::size_t input_dim =
        kind == AgentKind::QN
            ? env.observation_dim()
            : (options.concat_raw ? env.observation_dim() + encoder->latent_width()
                                  : encoder->latent_width());
    QNetwork net(input_dim, options.hidden_units, static_cast<std::size_t>(env.action_count()),
                 options.qn_activation, agent_rng, options.learning_rate);
    TargetNetwork target(net);
    ReplayMemory replay(options.replay_capacity);

    std::int64_t global_step = 0;
    for (int episode = 1; episode <= options.episode_budget; ++episode) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<double> raw = env.reset(env_rng);
        std::vector<double> state = detail::map_state(kind, encoder, raw, options.concat_raw);

        double episode_reward = 0.0;
        int episode_steps = 0;
        double loss_acc = 0.0;
        std::int64_t loss_count = 0;
        double eps = options.epsilon.value(global_step);

        while (!env.done()) {
            eps = options.epsilon.value(global_step);
            const int action = select_action(net.q_values(state), eps, agent_rng);
            EnvStep step = env.step(action);
            std::vector<double> next_state =
                detail::map_state(kind, encoder, step.observation, options.concat_raw);

            if (trajectory_out) {
                for (double v : step.observation) *trajectory_out << v << ',';
                *trajectory_out << action << ',' << step.reward << '\n';
            }

            replay.push({state, action, step.reward, next_state, step.done});
            episode_reward += step.reward;
            ++episode_steps;
            ++global_step;

            if (global_step % options.train_interval == 0 &&
                replay.size() >= options.batch_size) {
                const auto batch = replay.sample(options.batch_size, agent_rng);
                loss_acc += net.train_step(target.net, batch, options.gamma);
                ++loss_count;
            }
            if (global_step % options.sync_interval == 0) target.sync(net);

            state = std::move(next_state);
        }

        const auto t1 = std::chrono::steady_clock::now();
        EpisodeRecord rec;
        rec.episode = episode;
        rec.total_reward = episode_reward;
        rec.steps = episode_steps;
        rec.epsilon = eps;
        rec.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
        rec.loss_mean = loss_count > 0 ? loss_acc / static_cast<double>(loss_count) : 0.0;
        records.push_back(rec);

        if (options.solve_threshold && records.size() >= 100 &&
            detail::rolling_mean_tail(records, 100) >= *options.solve_threshold) {
            break;
        }
    }
    return records;
}

}  // namespace saqn
