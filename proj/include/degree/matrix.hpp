#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace degree {

/// Dense row-major 2-D array of doubles. The universal carrier for node
/// features, layer weights and activations. Values are immutable by
/// convention once an operation has produced them; all free functions
/// below are pure.
class matrix {
public:
    matrix() = default;
    matrix(int rows, int cols, double fill = 0.0);

    static matrix identity(int n);
    /// Builds from nested rows; every row must have the same length.
    static matrix from_rows(const std::vector<std::vector<double>>& rows);

    int rows() const { return static_cast<int>(rows_); }
    int cols() const { return static_cast<int>(cols_); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    std::span<double> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, cols_}; }
    std::span<const double> row(int r) const {
        return {data_.data() + static_cast<std::size_t>(r) * cols_, cols_};
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// True when every entry is finite (no NaN/Inf).
    bool all_finite() const;

    bool operator==(const matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Standard matrix product; throws dimension_error naming both shapes.
matrix matmul(const matrix& a, const matrix& b);

/// Entry-wise absolute value.
matrix elementwise_abs(const matrix& a);

/// Entry-wise sum / difference; shapes must match.
matrix add(const matrix& a, const matrix& b);
matrix sub(const matrix& a, const matrix& b);

matrix transpose(const matrix& a);

/// Per-row softmax restricted to active entries (row-major mask of size
/// rows*cols). Inactive entries are exactly 0; active entries are
/// stabilized by subtracting the row max before exponentiation. A row
/// with no active entry is degenerate and raises numeric_error.
matrix row_softmax(const matrix& a, const std::vector<std::uint8_t>& active_mask);

/// Softmax over every entry of every row.
matrix row_softmax(const matrix& a);

/// max_ij |a_ij - b_ij|; shapes must match.
double max_abs_diff(const matrix& a, const matrix& b);

} // namespace degree
