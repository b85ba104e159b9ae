#include "sshash/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace sshash {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_)
        throw InvalidInput("matrix: " + std::to_string(values_.size()) + " values for a " +
                           std::to_string(rows_) + "x" + std::to_string(cols_) + " matrix");
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Matrix::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::gather_rows(std::span<const std::size_t> rows) const {
    Matrix out(rows.size(), cols_);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= rows_) throw InvalidInput("gather_rows: row index out of range");
        std::copy_n(values_.data() + rows[i] * cols_, cols_, out.data() + i * cols_);
    }
    return out;
}

Matrix Matrix::slice_cols(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw InvalidInput("slice_cols: column range out of bounds");
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
        std::copy_n(values_.data() + r * cols_ + first, count, out.data() + r * count);
    return out;
}

std::string shape_string(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace sshash
