#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "saqn/errors.hpp"

namespace saqn {

/// Episode-level outcome of one simulation (one seed): final reward and wall
/// time per episode, index-aligned.
struct SimulationTrace {
    std::vector<double> rewards;
    std::vector<double> times;
};

inline void validate_trace(const SimulationTrace& t) {
    if (t.rewards.empty()) throw InputError("SimulationTrace: empty");
    if (t.rewards.size() != t.times.size()) {
        throw DimensionError("SimulationTrace: rewards/times length mismatch");
    }
}

/// Mean of the 100 episodes ending at 1-based episode end_index.
inline double rolling_avg_100(const std::vector<double>& rewards, std::size_t end_index) {
    if (end_index < 100 || end_index > rewards.size()) {
        throw InputError("rolling_avg_100: window [" + std::to_string(end_index) +
                         "-99, " + std::to_string(end_index) + "] undefined for " +
                         std::to_string(rewards.size()) + " episodes");
    }
    double acc = 0.0;
    for (std::size_t i = end_index - 100; i < end_index; ++i) acc += rewards[i];
    return acc / 100.0;
}

/// Earliest 1-based episode x >= 100 whose trailing-100 average reaches thr.
inline std::optional<std::size_t> first_convergence_episode(const SimulationTrace& trace,
                                                            double thr) {
    validate_trace(trace);
    if (trace.rewards.size() < 100) {
        throw InputError("first_convergence_episode: trace shorter than 100 episodes");
    }
    // Incremental window keeps this O(n).
    double acc = 0.0;
    for (std::size_t i = 0; i < 100; ++i) acc += trace.rewards[i];
    if (acc / 100.0 >= thr) return 100;
    for (std::size_t x = 101; x <= trace.rewards.size(); ++x) {
        acc += trace.rewards[x - 1] - trace.rewards[x - 101];
        if (acc / 100.0 >= thr) return x;
    }
    return std::nullopt;
}

/// Number of Converged Simulations: final trailing-100 average >= thr
/// (inclusive).
inline int ncs(const std::vector<SimulationTrace>& traces, double thr) {
    int count = 0;
    for (const auto& t : traces) {
        validate_trace(t);
        if (rolling_avg_100(t.rewards, t.rewards.size()) >= thr) ++count;
    }
    return count;
}

/// Average Episodes to Convergence over the simulations that converged;
/// nullopt when none did.
inline std::optional<double> aec(const std::vector<SimulationTrace>& traces, double thr) {
    double acc = 0.0;
    int n = 0;
    for (const auto& t : traces) {
        if (const auto x = first_convergence_episode(t, thr)) {
            acc += static_cast<double>(*x);
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return acc / n;
}

/// Average Time Taken per simulation: mean of summed per-episode seconds.
inline double att(const std::vector<SimulationTrace>& traces) {
    if (traces.empty()) throw InputError("att: no traces");
    double acc = 0.0;
    for (const auto& t : traces) {
        validate_trace(t);
        for (double v : t.times) acc += v;
    }
    return acc / static_cast<double>(traces.size());
}

/// Average Reward per simulation, normalized per episode so different
/// episode counts stay comparable.
inline double ar(const std::vector<SimulationTrace>& traces) {
    if (traces.empty()) throw InputError("ar: no traces");
    double acc = 0.0;
    for (const auto& t : traces) {
        validate_trace(t);
        double sum = 0.0;
        for (double v : t.rewards) sum += v;
        acc += sum / static_cast<double>(t.rewards.size());
    }
    return acc / static_cast<double>(traces.size());
}

/// Raw double-sum variant (total reward per simulation, averaged over
/// simulations) kept alongside the per-episode form.
inline double ar_total(const std::vector<SimulationTrace>& traces) {
    if (traces.empty()) throw InputError("ar_total: no traces");
    double acc = 0.0;
    for (const auto& t : traces) {
        validate_trace(t);
        for (double v : t.rewards) acc += v;
    }
    return acc / static_cast<double>(traces.size());
}

/// Aggregated evaluation metrics across the simulations of one agent.
/// windows_defined is false when traces are shorter than the 100-episode
/// window, in which case the threshold metrics (ncs/aec) are not meaningful.
struct MetricsReport {
    int ncs = 0;
    int n_sims = 0;
    std::optional<double> aec_mean;
    std::optional<double> aec_std;
    double att_mean = 0.0;
    double att_std = 0.0;
    double ar_mean = 0.0;
    double ar_std = 0.0;
    double ar_sum_mean = 0.0;
    double ar_sum_std = 0.0;
    std::optional<double> thr;
    bool windows_defined = true;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    return {mean, std::sqrt(var)};
}

}  // namespace detail

inline MetricsReport build_metrics_report(const std::vector<SimulationTrace>& traces,
                                          std::optional<double> thr) {
    if (traces.empty()) throw InputError("build_metrics_report: no traces");
    MetricsReport r;
    r.n_sims = static_cast<int>(traces.size());
    r.thr = thr;

    std::vector<double> per_sim_time, per_sim_ar, per_sim_sum;
    for (const auto& t : traces) {
        validate_trace(t);
        double tsum = 0.0, rsum = 0.0;
        for (double v : t.times) tsum += v;
        for (double v : t.rewards) rsum += v;
        per_sim_time.push_back(tsum);
        per_sim_sum.push_back(rsum);
        per_sim_ar.push_back(rsum / static_cast<double>(t.rewards.size()));
    }
    std::tie(r.att_mean, r.att_std) = detail::mean_std(per_sim_time);
    std::tie(r.ar_mean, r.ar_std) = detail::mean_std(per_sim_ar);
    std::tie(r.ar_sum_mean, r.ar_sum_std) = detail::mean_std(per_sim_sum);

    for (const auto& t : traces) {
        if (t.rewards.size() < 100) r.windows_defined = false;
    }
    if (thr && r.windows_defined) {
        r.ncs = ncs(traces, *thr);
        std::vector<double> conv;
        for (const auto& t : traces) {
            if (const auto x = first_convergence_episode(t, *thr)) {
                conv.push_back(static_cast<double>(*x));
            }
        }
        if (!conv.empty()) {
            const auto [m, s] = detail::mean_std(conv);
            r.aec_mean = m;
            r.aec_std = s;
        }
    }
    return r;
}

}  // namespace saqn
