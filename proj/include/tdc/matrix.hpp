#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace tdc {

// Dense row-major matrix of doubles. The whole toolkit runs in 64-bit
// precision; gradient checks and bit-compatible persistence rely on it.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    static Matrix row_vector(std::vector<double> values) {
        Matrix m;
        m.rows_ = 1;
        m.cols_ = static_cast<int>(values.size());
        m.data_ = std::move(values);
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    double* row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
    const double* row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }
    std::span<double> row_span(int r) { return {row(r), static_cast<size_t>(cols_)}; }
    std::span<const double> row_span(int r) const { return {row(r), static_cast<size_t>(cols_)}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(0.0); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

}  // namespace tdc
