// Command-line front end for the SAQN experiment harness.
//
// Verbs:
//   pretrain     collect observations and pre-train the evolving autoencoder
//   train        full pipeline for the configured agent over all seeds
//   compare      qn/aqn/saqn comparison with shared seeds
//   dump-latents encode the collected observation memory to a labeled CSV
//   metrics      recompute the metrics report from existing episode CSVs
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "saqn/config.hpp"
#include "saqn/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file (JSON)")->required();
    cmd->add_option("--out", args.out_dir, "output directory (defaults to config output_dir)");
    cmd->add_option("--seed", args.seed_override, "run a single seed instead of the config list");
}

saqn::ExperimentConfig load(const CommonArgs& args) {
    saqn::ExperimentConfig c = saqn::load_config(args.config_path);
    if (args.seed_override) c.seeds = {*args.seed_override};
    if (!args.out_dir.empty()) c.output_dir = args.out_dir;
    return c;
}

void print_metrics_line(const std::string& name, const saqn::MetricsReport& r) {
    std::printf("%-5s  NCS %d/%d", name.c_str(), r.ncs, r.n_sims);
    if (r.aec_mean) {
        std::printf("  AEC %.2f+-%.2f", *r.aec_mean, r.aec_std.value_or(0.0));
    } else if (r.thr) {
        std::printf("  AEC n/a");
    }
    std::printf("  ATT %.2f+-%.2fs  AR %.4f+-%.4f\n", r.att_mean, r.att_std, r.ar_mean, r.ar_std);
}

int run_pretrain(const saqn::ExperimentConfig& c) {
    namespace fs = std::filesystem;
    fs::create_directories(c.output_dir);
    const bool evolve = c.agent != "aqn";
    for (std::uint64_t seed : c.seeds) {
        auto memory = saqn::collect_for_seed(c, seed);
        std::size_t fixed = evolve ? 1 : static_cast<std::size_t>(c.ae.aqn_fixed_width);
        auto [encoder, result] = saqn::pretrain_for_seed(c, seed, memory, evolve, fixed);
        const std::string path =
            (fs::path(c.output_dir) / ("evolution_seed" + std::to_string(seed) + ".jsonl"))
                .string();
        saqn::write_evolution_jsonl(path, result.log);
        std::printf("seed %llu: width %zu (grow %lld, prune %lld), final loss %.6f -> %s\n",
                    static_cast<unsigned long long>(seed), encoder.latent_width(),
                    static_cast<long long>(result.grow_events),
                    static_cast<long long>(result.prune_events), result.final_loss, path.c_str());
    }
    return 0;
}

int run_dump_latents(const saqn::ExperimentConfig& c) {
    namespace fs = std::filesystem;
    if (c.agent == "qn") {
        throw saqn::ConfigError("dump-latents needs an encoder-based agent (aqn or saqn)");
    }
    fs::create_directories(c.output_dir);
    const std::uint64_t seed = c.seeds.front();
    auto memory = saqn::collect_for_seed(c, seed);
    const bool evolve = c.agent == "saqn";
    std::size_t fixed = evolve ? 1 : static_cast<std::size_t>(c.ae.aqn_fixed_width);
    auto [encoder, result] = saqn::pretrain_for_seed(c, seed, memory, evolve, fixed);

    std::vector<std::pair<std::string, std::vector<double>>> labeled;
    labeled.reserve(memory.size());
    for (const auto& raw : memory) labeled.emplace_back(saqn::state_label(c, raw), raw);
    const std::string path =
        (fs::path(c.output_dir) / ("latents_seed" + std::to_string(seed) + ".csv")).string();
    saqn::dump_latents(encoder, labeled, path);
    std::printf("seed %llu: wrote %zu rows, %zu latent dims -> %s\n",
                static_cast<unsigned long long>(seed), labeled.size(), encoder.latent_width(),
                path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-evolving autoencoder + Q-Network experiment harness"};
    app.require_subcommand(1);

    CommonArgs pretrain_args, train_args, compare_args, latents_args, metrics_args;
    CLI::App* cmd_pretrain = app.add_subcommand("pretrain", "pre-train the evolving autoencoder");
    add_common(cmd_pretrain, pretrain_args);
    CLI::App* cmd_train = app.add_subcommand("train", "train the configured agent");
    add_common(cmd_train, train_args);
    CLI::App* cmd_compare = app.add_subcommand("compare", "run qn, aqn and saqn on shared seeds");
    add_common(cmd_compare, compare_args);
    CLI::App* cmd_latents = app.add_subcommand("dump-latents", "export labeled latent vectors");
    add_common(cmd_latents, latents_args);
    CLI::App* cmd_metrics = app.add_subcommand("metrics", "recompute metrics from episode CSVs");
    add_common(cmd_metrics, metrics_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_pretrain->parsed()) {
            return run_pretrain(load(pretrain_args));
        }
        if (cmd_train->parsed()) {
            const saqn::ExperimentConfig c = load(train_args);
            saqn::run_experiment(c, c.output_dir);
            std::printf("run complete -> %s\n", c.output_dir.c_str());
            std::ifstream metrics(std::filesystem::path(c.output_dir) / "metrics.json");
            if (metrics) std::cout << metrics.rdbuf();
            return 0;
        }
        if (cmd_compare->parsed()) {
            const saqn::ExperimentConfig c = load(compare_args);
            const nlohmann::json comparison = saqn::compare_agents(c, c.output_dir);
            for (const char* name : {"qn", "aqn", "saqn"}) {
                saqn::MetricsReport r;
                const auto& m = comparison.at("agents").at(name).at("metrics");
                r.ncs = m.at("ncs").get<int>();
                r.n_sims = m.at("n_sims").get<int>();
                if (!m.at("aec_mean").is_null()) r.aec_mean = m.at("aec_mean").get<double>();
                if (!m.at("aec_std").is_null()) r.aec_std = m.at("aec_std").get<double>();
                r.att_mean = m.at("att_mean").get<double>();
                r.att_std = m.at("att_std").get<double>();
                r.ar_mean = m.at("ar_mean").get<double>();
                r.ar_std = m.at("ar_std").get<double>();
                if (!m.at("thr").is_null()) r.thr = m.at("thr").get<double>();
                print_metrics_line(name, r);
            }
            std::printf("comparison written -> %s/comparison.json\n", c.output_dir.c_str());
            return 0;
        }
        if (cmd_latents->parsed()) {
            return run_dump_latents(load(latents_args));
        }
        if (cmd_metrics->parsed()) {
            const saqn::ExperimentConfig c = load(metrics_args);
            const saqn::MetricsReport r = saqn::recompute_metrics(c, c.output_dir);
            print_metrics_line(c.agent, r);
            return 0;
        }
    } catch (const saqn::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
