#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "saqn/activations.hpp"
#include "saqn/agent.hpp"
#include "saqn/autoencoder.hpp"
#include "saqn/errors.hpp"

namespace saqn {

/// Full experiment description, loaded from a single JSON file. Unknown keys
/// are rejected so typos fail loudly instead of silently using defaults.
struct ExperimentConfig {
    std::string environment;  // cartpole | grid
    std::string agent;        // qn | aqn | saqn
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int episode_budget = 500;
    std::optional<double> solve_threshold;  // defaulted per environment
    std::int64_t observation_collection_steps = 5000;
    bool collection_random_start = false;  // grid only: randomize poses while collecting
    std::string output_dir = "out";
    bool dump_trajectories = false;

    struct Ae {
        std::string activation;  // defaulted per environment
        double lr = 0.01;
        std::int64_t max_steps = 2000;
        int batch = 16;
        int initial_width = 1;
        int aqn_fixed_width = 0;  // 0 = inherit the evolved width (compare mode)
        RegulatoryConstants regulatory{};
        std::vector<double> normalization_lo;  // defaulted per environment
        std::vector<double> normalization_hi;
    } ae;

    struct Qn {
        double gamma = 0.99;
        double eps_start = 1.0;
        double eps_end = 0.05;
        std::int64_t eps_decay_steps = 10000;
        std::int64_t replay_capacity = 50000;
        int batch = 64;
        std::int64_t train_interval = 1;
        std::int64_t sync_interval = 500;
        double lr = 1e-3;
        int hidden = 256;
        std::string activation;  // defaulted per environment
        bool concat_raw = false;
    } qn;

    AgentKind agent_kind() const { return agent_kind_from_string(agent); }
    Activation ae_activation() const { return activation_from_string(ae.activation); }
    Activation qn_activation() const { return activation_from_string(qn.activation); }

    FeatureScaler scaler() const {
        return FeatureScaler::for_activation(ae.normalization_lo, ae.normalization_hi,
                                             ae_activation());
    }
};

namespace cfg_detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                                const std::string& scope) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError("unknown config key '" + (scope.empty() ? "" : scope + ".") +
                              it.key() + "'");
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config field '") + key + "': " + e.what());
        }
    }
}

}  // namespace cfg_detail

/// Fills environment-dependent defaults (activations, solve threshold,
/// normalization bounds) after explicit values were applied.
inline void apply_environment_defaults(ExperimentConfig& c) {
    const bool cartpole = c.environment == "cartpole";
    if (c.ae.activation.empty()) c.ae.activation = cartpole ? "tanh" : "sigmoid";
    if (c.qn.activation.empty()) c.qn.activation = cartpole ? "tanh" : "sigmoid";
    if (!c.solve_threshold && cartpole) c.solve_threshold = 195.0;
    if (c.ae.normalization_lo.empty()) {
        if (cartpole) {
            // Position/angle bounds at the termination limits; velocity
            // bounds generous empirical envelopes; angle bound slightly past
            // the 15-degree cutoff so terminal states stay distinguishable.
            c.ae.normalization_lo = {-2.4, -3.0, -0.30, -3.5};
            c.ae.normalization_hi = {2.4, 3.0, 0.30, 3.5};
        } else {
            // Grid codes already live in [0,1]; identity bounds keep them
            // there, matching the sigmoid reconstruction range.
            c.ae.normalization_lo.assign(147, 0.0);
            c.ae.normalization_hi.assign(147, 1.0);
        }
    }
}

inline void validate_config(const ExperimentConfig& c) {
    if (c.environment != "cartpole" && c.environment != "grid") {
        throw ConfigError("config field 'environment': expected cartpole|grid, got '" +
                          c.environment + "'");
    }
    if (c.agent != "qn" && c.agent != "aqn" && c.agent != "saqn") {
        throw ConfigError("config field 'agent': expected qn|aqn|saqn, got '" + c.agent + "'");
    }
    if (c.seeds.empty()) throw ConfigError("config field 'seeds': must be nonempty");
    {
        std::set<std::uint64_t> uniq(c.seeds.begin(), c.seeds.end());
        if (uniq.size() != c.seeds.size()) {
            throw ConfigError("config field 'seeds': values must be distinct");
        }
    }
    if (c.episode_budget < 0) throw ConfigError("config field 'episode_budget': must be >= 0");
    if (c.observation_collection_steps < 1) {
        throw ConfigError("config field 'observation_collection_steps': must be >= 1");
    }
    activation_from_string(c.ae.activation);
    activation_from_string(c.qn.activation);
    if (c.agent == "saqn" && c.ae.activation == "relu") {
        throw ConfigError(
            "config field 'ae.activation': relu cannot drive evolution (no closed-form "
            "expectation); use tanh or sigmoid for saqn");
    }
    if (c.qn.activation == "relu") {
        throw ConfigError("config field 'qn.activation': expected tanh|sigmoid");
    }
    if (c.agent == "aqn" && c.ae.aqn_fixed_width < 1) {
        throw ConfigError(
            "config field 'ae.aqn_fixed_width': standalone aqn runs need an explicit width >= 1 "
            "(compare mode inherits the evolved width)");
    }
    if (c.ae.lr <= 0 || c.qn.lr <= 0) throw ConfigError("learning rates must be > 0");
    if (c.ae.max_steps < 1) throw ConfigError("config field 'ae.max_steps': must be >= 1");
    if (c.ae.batch < 1 || c.qn.batch < 1) throw ConfigError("batch sizes must be >= 1");
    if (c.ae.initial_width < 1) {
        throw ConfigError("config field 'ae.initial_width': must be >= 1");
    }
    if (c.qn.gamma <= 0.0 || c.qn.gamma >= 1.0) {
        throw ConfigError("config field 'qn.gamma': must lie in (0,1)");
    }
    if (c.qn.eps_start < 0 || c.qn.eps_start > 1 || c.qn.eps_end < 0 || c.qn.eps_end > 1) {
        throw ConfigError("config epsilon bounds must lie in [0,1]");
    }
    if (c.qn.eps_end > c.qn.eps_start) {
        throw ConfigError("config field 'qn.eps_end': must not exceed qn.eps_start");
    }
    if (c.qn.replay_capacity < 1) {
        throw ConfigError("config field 'qn.replay_capacity': must be >= 1");
    }
    if (c.qn.train_interval < 1 || c.qn.sync_interval < 1) {
        throw ConfigError("train/sync intervals must be >= 1");
    }
    if (c.qn.hidden < 1) throw ConfigError("config field 'qn.hidden': must be >= 1");
    const std::size_t expected_dim = c.environment == "cartpole" ? 4 : 147;
    if (c.ae.normalization_lo.size() != expected_dim ||
        c.ae.normalization_hi.size() != expected_dim) {
        throw ConfigError("config field 'ae.normalization': expected " +
                          std::to_string(expected_dim) + " bounds per side for " + c.environment);
    }
    for (std::size_t i = 0; i < c.ae.normalization_lo.size(); ++i) {
        if (!(c.ae.normalization_lo[i] < c.ae.normalization_hi[i])) {
            throw ConfigError("config field 'ae.normalization': lo must be < hi at index " +
                              std::to_string(i));
        }
    }
    const auto& k = c.ae.regulatory;
    if (k.alpha_bias <= 0 || k.beta_bias <= 0 || k.alpha_var <= 0 || k.beta_var <= 0 ||
        k.prune_multiplier <= 0) {
        throw ConfigError("config field 'ae.regulatory': all constants must be > 0");
    }
}

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using cfg_detail::read;
    using nlohmann::json;

    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    cfg_detail::reject_unknown_keys(
        j,
        {"environment", "agent", "seeds", "episode_budget", "solve_threshold",
         "observation_collection_steps", "collection_random_start", "output_dir",
         "dump_trajectories", "ae", "qn"},
        "");

    ExperimentConfig c;
    read(j, "environment", c.environment);
    read(j, "agent", c.agent);
    read(j, "seeds", c.seeds);
    read(j, "episode_budget", c.episode_budget);
    if (j.contains("solve_threshold") && !j.at("solve_threshold").is_null()) {
        c.solve_threshold = j.at("solve_threshold").get<double>();
    }
    read(j, "observation_collection_steps", c.observation_collection_steps);
    read(j, "collection_random_start", c.collection_random_start);
    read(j, "output_dir", c.output_dir);
    read(j, "dump_trajectories", c.dump_trajectories);

    if (j.contains("ae")) {
        const json& a = j.at("ae");
        cfg_detail::reject_unknown_keys(a,
                                        {"activation", "lr", "max_steps", "batch",
                                         "initial_width", "aqn_fixed_width", "regulatory",
                                         "normalization"},
                                        "ae");
        read(a, "activation", c.ae.activation);
        read(a, "lr", c.ae.lr);
        read(a, "max_steps", c.ae.max_steps);
        read(a, "batch", c.ae.batch);
        read(a, "initial_width", c.ae.initial_width);
        read(a, "aqn_fixed_width", c.ae.aqn_fixed_width);
        if (a.contains("regulatory")) {
            const json& r = a.at("regulatory");
            cfg_detail::reject_unknown_keys(
                r, {"alpha_bias", "beta_bias", "alpha_var", "beta_var", "prune_multiplier"},
                "ae.regulatory");
            read(r, "alpha_bias", c.ae.regulatory.alpha_bias);
            read(r, "beta_bias", c.ae.regulatory.beta_bias);
            read(r, "alpha_var", c.ae.regulatory.alpha_var);
            read(r, "beta_var", c.ae.regulatory.beta_var);
            read(r, "prune_multiplier", c.ae.regulatory.prune_multiplier);
        }
        if (a.contains("normalization")) {
            const json& nrm = a.at("normalization");
            cfg_detail::reject_unknown_keys(nrm, {"lo", "hi"}, "ae.normalization");
            read(nrm, "lo", c.ae.normalization_lo);
            read(nrm, "hi", c.ae.normalization_hi);
        }
    }
    if (j.contains("qn")) {
        const json& q = j.at("qn");
        cfg_detail::reject_unknown_keys(
            q,
            {"gamma", "eps_start", "eps_end", "eps_decay_steps", "replay_capacity", "batch",
             "train_interval", "sync_interval", "lr", "hidden", "activation", "concat_raw"},
            "qn");
        read(q, "gamma", c.qn.gamma);
        read(q, "eps_start", c.qn.eps_start);
        read(q, "eps_end", c.qn.eps_end);
        read(q, "eps_decay_steps", c.qn.eps_decay_steps);
        read(q, "replay_capacity", c.qn.replay_capacity);
        read(q, "batch", c.qn.batch);
        read(q, "train_interval", c.qn.train_interval);
        read(q, "sync_interval", c.qn.sync_interval);
        read(q, "lr", c.qn.lr);
        read(q, "hidden", c.qn.hidden);
        read(q, "activation", c.qn.activation);
        read(q, "concat_raw", c.qn.concat_raw);
    }

    apply_environment_defaults(c);
    validate_config(c);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in '" + path + "': " + e.what());
    }
    return parse_config(j);
}

/// Canonical JSON form (keys sorted by nlohmann's object ordering), used for
/// round-trips and the stable config hash.
inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["environment"] = c.environment;
    j["agent"] = c.agent;
    j["seeds"] = c.seeds;
    j["episode_budget"] = c.episode_budget;
    if (c.solve_threshold) {
        j["solve_threshold"] = *c.solve_threshold;
    } else {
        j["solve_threshold"] = nullptr;
    }
    j["observation_collection_steps"] = c.observation_collection_steps;
    j["collection_random_start"] = c.collection_random_start;
    j["output_dir"] = c.output_dir;
    j["dump_trajectories"] = c.dump_trajectories;
    j["ae"] = {{"activation", c.ae.activation},
               {"lr", c.ae.lr},
               {"max_steps", c.ae.max_steps},
               {"batch", c.ae.batch},
               {"initial_width", c.ae.initial_width},
               {"aqn_fixed_width", c.ae.aqn_fixed_width},
               {"regulatory",
                {{"alpha_bias", c.ae.regulatory.alpha_bias},
                 {"beta_bias", c.ae.regulatory.beta_bias},
                 {"alpha_var", c.ae.regulatory.alpha_var},
                 {"beta_var", c.ae.regulatory.beta_var},
                 {"prune_multiplier", c.ae.regulatory.prune_multiplier}}},
               {"normalization", {{"lo", c.ae.normalization_lo}, {"hi", c.ae.normalization_hi}}}};
    j["qn"] = {{"gamma", c.qn.gamma},
               {"eps_start", c.qn.eps_start},
               {"eps_end", c.qn.eps_end},
               {"eps_decay_steps", c.qn.eps_decay_steps},
               {"replay_capacity", c.qn.replay_capacity},
               {"batch", c.qn.batch},
               {"train_interval", c.qn.train_interval},
               {"sync_interval", c.qn.sync_interval},
               {"lr", c.qn.lr},
               {"hidden", c.qn.hidden},
               {"activation", c.qn.activation},
               {"concat_raw", c.qn.concat_raw}};
    return j;
}

/// FNV-1a over the canonical dump; stable under key reordering in the source
/// file because nlohmann objects iterate in sorted key order.
inline std::string config_hash(const ExperimentConfig& c) {
    const std::string dump = config_to_json(c).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace saqn
