#pragma once

#include <cmath>
#include <cstdint>

namespace saqn {

/// Welford accumulator for streaming mean and variance. Population convention
/// (divide by n), matching the recursive-estimate flavour used by the
/// grow/prune statistics.
struct OnlineStats {
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;  // sum of squared deviations

    void update(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    double variance() const {
        if (count == 0) return 0.0;
        const double v = m2 / static_cast<double>(count);
        return v < 0.0 ? 0.0 : v;  // m2 can round slightly below zero
    }

    double stddev() const { return std::sqrt(variance()); }
};

}  // namespace saqn
