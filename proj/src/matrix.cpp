#include "degree/matrix.hpp"

#include "degree/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace degree {

namespace {

std::string shape_of(const matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const matrix& a, const matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw dimension_error(std::string(op) + ": shapes " + shape_of(a) + " and " +
                              shape_of(b) + " differ");
    }
}

} // namespace

matrix::matrix(int rows, int cols, double fill) {
    if (rows < 0 || cols < 0) throw dimension_error("matrix: negative dimensions");
    rows_ = static_cast<std::size_t>(rows);
    cols_ = static_cast<std::size_t>(cols);
    data_.assign(rows_ * cols_, fill);
}

matrix matrix::identity(int n) {
    matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

matrix matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return matrix{};
    const std::size_t cols = rows.front().size();
    matrix m(static_cast<int>(rows.size()), static_cast<int>(cols));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) {
            throw dimension_error("from_rows: row " + std::to_string(r) + " has " +
                                  std::to_string(rows[r].size()) + " entries, expected " +
                                  std::to_string(cols));
        }
        std::copy(rows[r].begin(), rows[r].end(), m.row(static_cast<int>(r)).begin());
    }
    return m;
}

bool matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

matrix matmul(const matrix& a, const matrix& b) {
    if (a.cols() != b.rows()) {
        throw dimension_error("matmul: " + shape_of(a) + " x " + shape_of(b) +
                              " inner dimensions differ");
    }
    matrix out(a.rows(), b.cols());
    const int n = a.rows(), k = a.cols(), m = b.cols();
    for (int i = 0; i < n; ++i) {
        double* out_row = out.row(i).data();
        const double* a_row = a.row(i).data();
        for (int p = 0; p < k; ++p) {
            const double av = a_row[p];
            if (av == 0.0) continue;
            const double* b_row = b.row(p).data();
            for (int j = 0; j < m; ++j) out_row[j] += av * b_row[j];
        }
    }
    return out;
}

matrix elementwise_abs(const matrix& a) {
    matrix out = a;
    for (double& v : out.data()) v = std::abs(v);
    return out;
}

matrix add(const matrix& a, const matrix& b) {
    require_same_shape(a, b, "add");
    matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

matrix sub(const matrix& a, const matrix& b) {
    require_same_shape(a, b, "sub");
    matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

matrix transpose(const matrix& a) {
    matrix out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

matrix row_softmax(const matrix& a, const std::vector<std::uint8_t>& active_mask) {
    if (active_mask.size() != a.size()) {
        throw dimension_error("row_softmax: mask size " + std::to_string(active_mask.size()) +
                              " does not cover matrix " + shape_of(a));
    }
    matrix out(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i) {
        const std::uint8_t* mask = active_mask.data() + static_cast<std::size_t>(i) * a.cols();
        double row_max = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < a.cols(); ++j)
            if (mask[j]) row_max = std::max(row_max, a(i, j));
        if (!std::isfinite(row_max)) {
            throw numeric_error("row_softmax: row " + std::to_string(i) + " has no active entries");
        }
        double total = 0.0;
        for (int j = 0; j < a.cols(); ++j) {
            if (!mask[j]) continue;
            out(i, j) = std::exp(a(i, j) - row_max);
            total += out(i, j);
        }
        for (int j = 0; j < a.cols(); ++j)
            if (mask[j]) out(i, j) /= total;
    }
    return out;
}

matrix row_softmax(const matrix& a) {
    return row_softmax(a, std::vector<std::uint8_t>(a.size(), 1));
}

double max_abs_diff(const matrix& a, const matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

} // namespace degree
