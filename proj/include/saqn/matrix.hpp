#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "saqn/errors.hpp"

namespace saqn {

/// Dense row-major matrix of 64-bit floats. This is deliberately minimal:
/// just what two-layer networks and a tied autoencoder need. No broadcasting,
/// no views, no autodiff.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                                 " != " + shape_str());
        }
    }

    /// Row-vector literal, e.g. Matrix::row({1.0, 2.0}).
    static Matrix row(std::initializer_list<double> values) {
        return Matrix(1, values.size(), std::vector<double>(values));
    }

    static Matrix row(std::vector<double> values) {
        const std::size_t n = values.size();
        return Matrix(1, n, std::move(values));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    const std::vector<double>& values() const { return data_; }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    /// Appends one column; existing entries are untouched.
    void append_col(const std::vector<double>& col) {
        if (col.size() != rows_) {
            throw DimensionError("append_col: column length " + std::to_string(col.size()) +
                                 " != row count " + std::to_string(rows_));
        }
        std::vector<double> next((cols_ + 1) * rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t j = 0; j < cols_; ++j) next[i * (cols_ + 1) + j] = (*this)(i, j);
            next[i * (cols_ + 1) + cols_] = col[i];
        }
        data_ = std::move(next);
        ++cols_;
    }

    /// Removes column j; remaining columns keep their relative order.
    void remove_col(std::size_t j) {
        if (j >= cols_) {
            throw DimensionError("remove_col: index " + std::to_string(j) + " out of " +
                                 std::to_string(cols_));
        }
        std::vector<double> next((cols_ - 1) * rows_);
        for (std::size_t i = 0; i < rows_; ++i) {
            std::size_t out = 0;
            for (std::size_t k = 0; k < cols_; ++k) {
                if (k == j) continue;
                next[i * (cols_ - 1) + out++] = (*this)(i, k);
            }
        }
        data_ = std::move(next);
        --cols_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                             b.shape_str());
    }
}

/// C = A * B. ikj loop order keeps the inner loop contiguous in both B and C.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: " + a.shape_str() + " x " + b.shape_str());
    }
    Matrix c(a.rows(), b.cols(), 0.0);
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* crow = c.row_ptr(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            if (aip == 0.0) continue;
            const double* brow = b.row_ptr(p);
            for (std::size_t j = 0; j < m; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

/// C = A * B^T without materializing the transpose.
inline Matrix matmul_transB(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_transB: " + a.shape_str() + " x " + b.shape_str() + "^T");
    }
    Matrix c(a.rows(), b.rows(), 0.0);
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (std::size_t j = 0; j < m; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
    return c;
}

/// C = A^T * B without materializing the transpose.
inline Matrix matmul_transA(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_transA: " + a.shape_str() + "^T x " + b.shape_str());
    }
    Matrix c(a.cols(), b.cols(), 0.0);
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t p = 0; p < n; ++p) {
        const double* arow = a.row_ptr(p);
        const double* brow = b.row_ptr(p);
        for (std::size_t i = 0; i < k; ++i) {
            const double aval = arow[i];
            if (aval == 0.0) continue;
            double* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < m; ++j) crow[j] += aval * brow[j];
        }
    }
    return c;
}

/// x*W + bias for a 1xd input row, the basic pre-activation of Eq.-style
/// tied layers. bias must be 1 x W.cols().
inline Matrix affine(const Matrix& x, const Matrix& w, const Matrix& bias) {
    if (x.rows() != 1 || x.cols() != w.rows()) {
        throw DimensionError("affine: input " + x.shape_str() + " vs weights " + w.shape_str());
    }
    if (bias.rows() != 1 || bias.cols() != w.cols()) {
        throw DimensionError("affine: bias " + bias.shape_str() + " vs weights " + w.shape_str());
    }
    Matrix out = matmul(x, w);
    for (std::size_t j = 0; j < out.cols(); ++j) out(0, j) += bias(0, j);
    return out;
}

/// Adds a 1xC row vector to every row of a matrix.
inline void add_row_vector(Matrix& m, const Matrix& v) {
    if (v.rows() != 1 || v.cols() != m.cols()) {
        throw DimensionError("add_row_vector: " + m.shape_str() + " + " + v.shape_str());
    }
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* row = m.row_ptr(i);
        const double* vr = v.row_ptr(0);
        for (std::size_t j = 0; j < m.cols(); ++j) row[j] += vr[j];
    }
}

/// Column sums collapsed to a 1xC row.
inline Matrix col_sums(const Matrix& m) {
    Matrix out(1, m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const double* row = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols(); ++j) out(0, j) += row[j];
    }
    return out;
}

inline void axpy(Matrix& y, double alpha, const Matrix& x) {
    require_same_shape(y, x, "axpy");
    double* yd = y.data();
    const double* xd = x.data();
    for (std::size_t i = 0; i < y.size(); ++i) yd[i] += alpha * xd[i];
}

}  // namespace saqn
