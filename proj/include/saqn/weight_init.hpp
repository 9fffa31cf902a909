#pragma once

#include <cmath>
#include <vector>

#include "saqn/errors.hpp"
#include "saqn/matrix.hpp"
#include "saqn/rng.hpp"

namespace saqn {

inline double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0) / std::sqrt(static_cast<double>(fan_in + fan_out));
}

/// n values drawn uniformly from +-sqrt(6)/sqrt(fan_in + fan_out); the draw
/// used both for whole-layer init and for newly grown hidden units.
inline std::vector<double> xavier_uniform_row(std::size_t fan_in, std::size_t fan_out,
                                              std::size_t n, SeededRng& rng) {
    if (fan_in == 0 || fan_out == 0) {
        throw DomainError("xavier_uniform_row: fan_in and fan_out must be >= 1");
    }
    const double bound = xavier_bound(fan_in, fan_out);
    std::vector<double> out(n);
    for (double& v : out) v = rng.uniform(-bound, bound);
    return out;
}

inline Matrix xavier_uniform_matrix(std::size_t rows, std::size_t cols, SeededRng& rng) {
    return Matrix(rows, cols, xavier_uniform_row(rows, cols, rows * cols, rng));
}

}  // namespace saqn
