#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "saqn/agent.hpp"
#include "saqn/cartpole.hpp"
#include "saqn/config.hpp"
#include "saqn/env.hpp"
#include "saqn/errors.hpp"
#include "saqn/gridworld.hpp"
#include "saqn/metrics.hpp"

namespace saqn {

inline constexpr const char* kCodeVersion = "0.1.0";

namespace harness_detail {

// Fixed fork salts so every phase draws from its own stream; this is what
// makes the first observation of a seed identical across agent kinds.
inline constexpr std::uint64_t kCollectStream = 0xC0;
inline constexpr std::uint64_t kPretrainStream = 0xAE;
inline constexpr std::uint64_t kEnvStream = 0xE1;
inline constexpr std::uint64_t kAgentStream = 0xA6;

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline nlohmann::json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

}  // namespace harness_detail

inline std::unique_ptr<Environment> make_environment(const ExperimentConfig& c,
                                                     bool random_start = false) {
    if (c.environment == "cartpole") return std::make_unique<CartPoleEnv>();
    return std::make_unique<GridEnv>(random_start);
}

inline std::string state_label(const ExperimentConfig& c, const std::vector<double>& raw) {
    return c.environment == "cartpole" ? cartpole_state_label(raw) : grid_state_label(raw);
}

inline void write_episode_csv(const std::string& path, const std::vector<EpisodeRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << "episode,total_reward,steps,epsilon,wall_time_s,loss_mean\n";
    for (const auto& r : records) {
        out << r.episode << ',' << harness_detail::fmt_double(r.total_reward) << ',' << r.steps
            << ',' << harness_detail::fmt_double(r.epsilon) << ','
            << harness_detail::fmt_double(r.wall_time_s) << ','
            << harness_detail::fmt_double(r.loss_mean) << '\n';
    }
}

inline std::vector<EpisodeRecord> read_episode_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty episode CSV '" + path + "'");
    std::vector<EpisodeRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        EpisodeRecord r;
        std::getline(ss, field, ',');
        r.episode = std::stoi(field);
        std::getline(ss, field, ',');
        r.total_reward = std::stod(field);
        std::getline(ss, field, ',');
        r.steps = std::stoi(field);
        std::getline(ss, field, ',');
        r.epsilon = std::stod(field);
        std::getline(ss, field, ',');
        r.wall_time_s = std::stod(field);
        std::getline(ss, field, ',');
        r.loss_mean = std::stod(field);
        records.push_back(r);
    }
    return records;
}

inline void write_evolution_jsonl(const std::string& path,
                                  const std::vector<EvolutionEvent>& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    for (const auto& ev : log) {
        nlohmann::json j;
        j["step"] = ev.step;
        j["event"] = to_string(ev.kind);
        j["r"] = ev.width;
        j["loss"] = harness_detail::number_or_null(ev.loss);
        j["bias_sq"] = harness_detail::number_or_null(ev.bias_sq);
        j["variance"] = harness_detail::number_or_null(ev.variance);
        j["d1"] = harness_detail::number_or_null(ev.d1);
        j["d2"] = harness_detail::number_or_null(ev.d2);
        out << j.dump() << '\n';
    }
}

/// Latent dump: one row per labeled state, columns label,z_1..z_r.
inline void dump_latents(const FrozenEncoder& encoder,
                         const std::vector<std::pair<std::string, std::vector<double>>>& states,
                         const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << "label";
    for (std::size_t j = 1; j <= encoder.latent_width(); ++j) out << ",z_" << j;
    out << '\n';
    for (const auto& [label, raw] : states) {
        const std::vector<double> z = encoder.encode(raw);
        out << label;
        for (double v : z) out << ',' << harness_detail::fmt_double(v);
        out << '\n';
    }
}

inline nlohmann::json metrics_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["ncs"] = r.ncs;
    j["n_sims"] = r.n_sims;
    j["aec_mean"] = r.aec_mean ? nlohmann::json(*r.aec_mean) : nlohmann::json(nullptr);
    j["aec_std"] = r.aec_std ? nlohmann::json(*r.aec_std) : nlohmann::json(nullptr);
    j["att_mean"] = r.att_mean;
    j["att_std"] = r.att_std;
    j["ar_mean"] = r.ar_mean;
    j["ar_std"] = r.ar_std;
    j["ar_sum_mean"] = r.ar_sum_mean;
    j["ar_sum_std"] = r.ar_sum_std;
    j["thr"] = r.thr ? nlohmann::json(*r.thr) : nlohmann::json(nullptr);
    j["windows_defined"] = r.windows_defined;
    return j;
}

inline SimulationTrace trace_from_records(const std::vector<EpisodeRecord>& records) {
    SimulationTrace t;
    for (const auto& r : records) {
        t.rewards.push_back(r.total_reward);
        t.times.push_back(r.wall_time_s);
    }
    return t;
}

inline std::string iso_timestamp_utc() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

/// Everything produced for one seed of one agent kind.
struct SeedRunResult {
    std::uint64_t seed = 0;
    std::vector<EpisodeRecord> records;
    std::optional<std::size_t> final_width;
    std::int64_t grow_events = 0;
    std::int64_t prune_events = 0;
    std::int64_t variance_clamps = 0;
};

/// Collects the observation memory for one seed. Shared by the SAQN and AQN
/// pipelines so both pre-train on identical data.
inline std::vector<std::vector<double>> collect_for_seed(const ExperimentConfig& c,
                                                         std::uint64_t seed) {
    SeededRng base(seed);
    SeededRng collect_rng = base.fork(harness_detail::kCollectStream);
    auto env = make_environment(c, c.collection_random_start);
    return collect_observations(*env, c.observation_collection_steps, collect_rng);
}

/// Pre-trains the autoencoder for one seed. evolve=false freezes the width
/// (the AQN baseline); fixed_width then chooses the architecture.
inline std::pair<FrozenEncoder, PretrainResult> pretrain_for_seed(
    const ExperimentConfig& c, std::uint64_t seed,
    const std::vector<std::vector<double>>& memory, bool evolve, std::size_t fixed_width) {
    SeededRng base(seed);
    SeededRng pre_rng = base.fork(harness_detail::kPretrainStream);

    const std::size_t obs_dim = c.environment == "cartpole" ? 4 : 147;
    const std::size_t width = evolve ? static_cast<std::size_t>(c.ae.initial_width) : fixed_width;
    EvolvingAutoencoder ae(obs_dim, width, c.ae_activation(), pre_rng, c.ae.lr);

    PretrainOptions opts;
    opts.max_steps = c.ae.max_steps;
    opts.batch_size = static_cast<std::size_t>(c.ae.batch);
    opts.evolve = evolve;
    opts.constants = c.ae.regulatory;
    opts.scaler = c.scaler();
    PretrainResult result = pretrain(ae, memory, opts, pre_rng);
    return {FrozenEncoder{opts.scaler, std::move(ae)}, std::move(result)};
}

inline TrainOptions train_options_from_config(const ExperimentConfig& c) {
    TrainOptions o;
    o.gamma = c.qn.gamma;
    o.epsilon = {c.qn.eps_start, c.qn.eps_end, c.qn.eps_decay_steps};
    o.replay_capacity = static_cast<std::size_t>(c.qn.replay_capacity);
    o.batch_size = static_cast<std::size_t>(c.qn.batch);
    o.train_interval = c.qn.train_interval;
    o.sync_interval = c.qn.sync_interval;
    o.learning_rate = c.qn.lr;
    o.hidden_units = static_cast<std::size_t>(c.qn.hidden);
    o.qn_activation = c.qn_activation();
    o.episode_budget = c.episode_budget;
    o.solve_threshold = c.solve_threshold;
    o.concat_raw = c.qn.concat_raw;
    return o;
}

/// Trains one agent for one seed, writing its episode CSV (plus evolution
/// and latent dumps for the encoder-based agents) into out_dir.
inline SeedRunResult run_seed(const ExperimentConfig& c, AgentKind kind, std::uint64_t seed,
                              const std::filesystem::path& out_dir,
                              std::optional<std::size_t> aqn_width = std::nullopt) {
    SeedRunResult result;
    result.seed = seed;

    SeededRng base(seed);
    SeededRng env_rng = base.fork(harness_detail::kEnvStream);
    SeededRng agent_rng = base.fork(harness_detail::kAgentStream);

    std::optional<FrozenEncoder> encoder;
    std::vector<std::vector<double>> memory;
    if (kind != AgentKind::QN) {
        memory = collect_for_seed(c, seed);
        const bool evolve = kind == AgentKind::SAQN;
        std::size_t fixed = 1;
        if (!evolve) {
            if (aqn_width) {
                fixed = *aqn_width;
            } else if (c.ae.aqn_fixed_width >= 1) {
                fixed = static_cast<std::size_t>(c.ae.aqn_fixed_width);
            } else {
                throw ConfigError("aqn run needs ae.aqn_fixed_width or an inherited width");
            }
        }
        auto [enc, pre] = pretrain_for_seed(c, seed, memory, evolve, fixed);
        result.final_width = enc.latent_width();
        result.grow_events = pre.grow_events;
        result.prune_events = pre.prune_events;
        result.variance_clamps = pre.variance_clamps;
        write_evolution_jsonl(
            (out_dir / ("evolution_seed" + std::to_string(seed) + ".jsonl")).string(), pre.log);
        encoder = std::move(enc);
    }

    auto env = make_environment(c, /*random_start=*/false);
    TrainOptions opts = train_options_from_config(c);

    std::ofstream trajectory;
    std::ostream* trajectory_out = nullptr;
    if (c.dump_trajectories) {
        trajectory.open(out_dir / ("trajectory_seed" + std::to_string(seed) + ".csv"),
                        std::ios::binary);
        trajectory_out = &trajectory;
    }

    result.records = train_agent(kind, *env, encoder ? &*encoder : nullptr, opts, env_rng,
                                 agent_rng, trajectory_out);
    write_episode_csv((out_dir / ("episodes_seed" + std::to_string(seed) + ".csv")).string(),
                      result.records);

    if (encoder) {
        std::vector<std::pair<std::string, std::vector<double>>> labeled;
        labeled.reserve(memory.size());
        for (const auto& raw : memory) labeled.emplace_back(state_label(c, raw), raw);
        dump_latents(*encoder,
                     labeled, (out_dir / ("latents_seed" + std::to_string(seed) + ".csv")).string());
    }
    return result;
}

/// Runs the configured agent over all seeds, then aggregates metrics and
/// writes the manifest. Returns the manifest JSON.
inline nlohmann::json run_experiment(const ExperimentConfig& c, const std::string& out_dir_in,
                                     std::optional<AgentKind> kind_override = std::nullopt) {
    const AgentKind kind = kind_override.value_or(c.agent_kind());
    const std::filesystem::path out_dir(out_dir_in);
    std::filesystem::create_directories(out_dir);

    nlohmann::json manifest;
    manifest["code_version"] = kCodeVersion;
    manifest["config_hash"] = config_hash(c);
    manifest["created_at"] = iso_timestamp_utc();
    manifest["environment"] = c.environment;
    manifest["agent"] = to_string(kind);
    manifest["partial"] = false;
    manifest["seeds"] = nlohmann::json::array();

    std::vector<SimulationTrace> traces;
    try {
        for (std::uint64_t seed : c.seeds) {
            SeedRunResult r = run_seed(c, kind, seed, out_dir);
            nlohmann::json entry;
            entry["seed"] = seed;
            entry["episodes_csv"] = "episodes_seed" + std::to_string(seed) + ".csv";
            if (r.final_width) {
                entry["evolution_jsonl"] = "evolution_seed" + std::to_string(seed) + ".jsonl";
                entry["latents_csv"] = "latents_seed" + std::to_string(seed) + ".csv";
                entry["final_width"] = *r.final_width;
                entry["grow_events"] = r.grow_events;
                entry["prune_events"] = r.prune_events;
                entry["variance_clamps"] = r.variance_clamps;
            }
            manifest["seeds"].push_back(entry);
            if (!r.records.empty()) traces.push_back(trace_from_records(r.records));
        }

        if (!traces.empty()) {
            const MetricsReport report = build_metrics_report(traces, c.solve_threshold);
            std::ofstream mout(out_dir / "metrics.json", std::ios::binary);
            mout << metrics_to_json(report).dump(2) << '\n';
            manifest["metrics_json"] = "metrics.json";
        }
    } catch (...) {
        manifest["partial"] = true;
        std::ofstream out(out_dir / "manifest.json", std::ios::binary);
        out << manifest.dump(2) << '\n';
        throw;
    }

    std::ofstream out(out_dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
    return manifest;
}

/// Shared-seed three-agent comparison. SAQN runs first so the AQN baseline
/// can reuse each seed's evolved width; QN runs on raw observations. Output
/// lands in per-agent subdirectories plus a comparison summary.
inline nlohmann::json compare_agents(const ExperimentConfig& c, const std::string& out_dir_in) {
    const std::filesystem::path out_dir(out_dir_in);
    std::filesystem::create_directories(out_dir);

    nlohmann::json comparison;
    comparison["code_version"] = kCodeVersion;
    comparison["config_hash"] = config_hash(c);
    comparison["created_at"] = iso_timestamp_utc();
    comparison["environment"] = c.environment;
    comparison["agents"] = nlohmann::json::object();

    std::map<std::uint64_t, std::size_t> evolved_widths;

    for (const AgentKind kind : {AgentKind::SAQN, AgentKind::AQN, AgentKind::QN}) {
        const std::string name = to_string(kind);
        const std::filesystem::path agent_dir = out_dir / name;
        std::filesystem::create_directories(agent_dir);

        std::vector<SimulationTrace> traces;
        nlohmann::json seeds = nlohmann::json::array();
        for (std::uint64_t seed : c.seeds) {
            std::optional<std::size_t> aqn_width;
            if (kind == AgentKind::AQN) {
                if (c.ae.aqn_fixed_width >= 1) {
                    aqn_width = static_cast<std::size_t>(c.ae.aqn_fixed_width);
                } else {
                    aqn_width = evolved_widths.at(seed);
                }
            }
            SeedRunResult r = run_seed(c, kind, seed, agent_dir, aqn_width);
            if (kind == AgentKind::SAQN && r.final_width) evolved_widths[seed] = *r.final_width;

            nlohmann::json entry;
            entry["seed"] = seed;
            entry["episodes_csv"] = name + "/episodes_seed" + std::to_string(seed) + ".csv";
            if (r.final_width) entry["final_width"] = *r.final_width;
            seeds.push_back(entry);
            traces.push_back(trace_from_records(r.records));
        }

        const MetricsReport report = build_metrics_report(traces, c.solve_threshold);
        std::ofstream mout(agent_dir / "metrics.json", std::ios::binary);
        mout << metrics_to_json(report).dump(2) << '\n';

        nlohmann::json agent_json;
        agent_json["metrics"] = metrics_to_json(report);
        agent_json["seeds"] = seeds;
        comparison["agents"][name] = agent_json;
    }

    nlohmann::json widths = nlohmann::json::object();
    for (const auto& [seed, w] : evolved_widths) widths[std::to_string(seed)] = w;
    comparison["saqn_final_widths"] = widths;

    std::ofstream out(out_dir / "comparison.json", std::ios::binary);
    out << comparison.dump(2) << '\n';
    return comparison;
}

/// Recomputes the metrics report from the episode CSVs already present in a
/// run directory (via its manifest when available).
inline MetricsReport recompute_metrics(const ExperimentConfig& c, const std::string& dir_in) {
    const std::filesystem::path dir(dir_in);
    std::vector<SimulationTrace> traces;

    const std::filesystem::path manifest_path = dir / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        nlohmann::json manifest = nlohmann::json::parse(in);
        for (const auto& entry : manifest.at("seeds")) {
            const std::string csv = entry.at("episodes_csv").get<std::string>();
            traces.push_back(trace_from_records(read_episode_csv((dir / csv).string())));
        }
    } else {
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(dir)) {
            const std::string name = e.path().filename().string();
            if (name.rfind("episodes_seed", 0) == 0 && e.path().extension() == ".csv") {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            traces.push_back(trace_from_records(read_episode_csv(f.string())));
        }
    }
    if (traces.empty()) throw InputError("no episode CSVs found in '" + dir_in + "'");

    const MetricsReport report = build_metrics_report(traces, c.solve_threshold);
    std::ofstream mout(dir / "metrics.json", std::ios::binary);
    mout << metrics_to_json(report).dump(2) << '\n';
    return report;
}

}  // namespace saqn
