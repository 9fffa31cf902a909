#pragma once

#include <cmath>
#include <string>

#include "saqn/errors.hpp"
#include "saqn/matrix.hpp"

namespace saqn {

enum class Activation { Tanh, Sigmoid, Relu };

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Relu: return "relu";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "relu") return Activation::Relu;
    throw InputError("unknown activation '" + s + "' (expected tanh|sigmoid|relu)");
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double activate_scalar(double z, Activation kind) {
    switch (kind) {
        case Activation::Tanh: return std::tanh(z);
        case Activation::Sigmoid: return sigmoid(z);
        case Activation::Relu: return z > 0.0 ? z : 0.0;
    }
    return z;
}

/// Derivative expressed in terms of the pre-activation z.
inline double activate_deriv_scalar(double z, Activation kind) {
    switch (kind) {
        case Activation::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::Sigmoid: {
            const double s = sigmoid(z);
            return s * (1.0 - s);
        }
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

inline Matrix activate(const Matrix& z, Activation kind) {
    Matrix out = z;
    double* d = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) d[i] = activate_scalar(d[i], kind);
    return out;
}

inline Matrix activate_deriv(const Matrix& z, Activation kind) {
    Matrix out = z;
    double* d = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) d[i] = activate_deriv_scalar(d[i], kind);
    return out;
}

/// Closed-form Gaussian expectation of tanh under the probit approximation:
/// E[tanh(F)] ~ 2*sigmoid(2*mu / sqrt(1 + pi*var/2)) - 1 for F ~ N(mu, var).
/// This is the cheap surrogate the evolving layer uses instead of sampling.
inline double probit_expectation_tanh(double mu, double var) {
    if (var < 0.0) {
        throw DomainError("probit_expectation_tanh: negative variance " + std::to_string(var));
    }
    return 2.0 * sigmoid(2.0 * mu / std::sqrt(1.0 + 1.57079632679489661923 * var)) - 1.0;
}

/// Sigmoid counterpart: E[sigmoid(F)] ~ sigmoid(mu / sqrt(1 + pi*var/8)).
inline double probit_expectation_sigmoid(double mu, double var) {
    if (var < 0.0) {
        throw DomainError("probit_expectation_sigmoid: negative variance " + std::to_string(var));
    }
    return sigmoid(mu / std::sqrt(1.0 + 0.39269908169872415481 * var));
}

}  // namespace saqn
