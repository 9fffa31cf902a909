#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "saqn/errors.hpp"
#include "saqn/matrix.hpp"

namespace saqn {

/// Plain stochastic gradient descent: p <- p - lr * g.
struct SgdOptimizer {
    double lr = 0.01;

    void step(Matrix& param, const Matrix& grad) const {
        require_same_shape(param, grad, "SgdOptimizer::step");
        axpy(param, -lr, grad);
    }
};

/// Per-tensor Adam state. Moment shapes always track the parameter shape,
/// including across hidden-unit grow/prune resizes.
struct AdamSlot {
    Matrix m;
    Matrix v;

    explicit AdamSlot(std::size_t rows = 0, std::size_t cols = 0) : m(rows, cols), v(rows, cols) {}

    void match(const Matrix& param) {
        if (!m.same_shape(param)) {
            m = Matrix(param.rows(), param.cols());
            v = Matrix(param.rows(), param.cols());
        }
    }

    void append_col() {
        m.append_col(std::vector<double>(m.rows(), 0.0));
        v.append_col(std::vector<double>(v.rows(), 0.0));
    }

    void remove_col(std::size_t j) {
        m.remove_col(j);
        v.remove_col(j);
    }
};

/// Standard bias-corrected Adam. The step counter is shared across the slots
/// of one network so every tensor sees the same correction.
struct AdamOptimizer {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;

    void begin_step() { ++t; }

    void step(AdamSlot& slot, Matrix& param, const Matrix& grad) const {
        require_same_shape(param, grad, "AdamOptimizer::step");
        require_same_shape(param, slot.m, "AdamOptimizer::step (moment state)");
        const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        double* p = param.data();
        double* m = slot.m.data();
        double* v = slot.v.data();
        const double* g = grad.data();
        for (std::size_t i = 0; i < param.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double mhat = m[i] / corr1;
            const double vhat = v[i] / corr2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
};

}  // namespace saqn
