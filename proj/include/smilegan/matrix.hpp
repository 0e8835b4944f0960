#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "smilegan/error.hpp"

namespace smilegan {

using Vector = std::vector<double>;

// Dense row-major matrix of finite doubles. Entries are validated on
// checked construction; the uninitialized/fill constructors are for
// internal buffers that are written before being read.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_data(std::size_t rows, std::size_t cols, Vector data) {
        if (data.size() != rows * cols)
            throw Error(ErrorCode::ShapeMismatch, "matrix data length does not match rows*cols");
        for (double v : data)
            if (!std::isfinite(v))
                throw Error(ErrorCode::ShapeMismatch, "matrix entries must be finite");
        Matrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.data_ = std::move(data);
        return m;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);

// c = a * b^T; the contraction runs over contiguous rows of both operands.
Matrix matmul_bt(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

double frobenius_norm(const Matrix& a);

double max_abs(const Matrix& a);

}  // namespace smilegan
