#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace carbontag::linalg {

/// Dense column-major matrix. Columns are contiguous, which is how design
/// matrices are built and how Householder QR consumes them.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[c * rows_ + r]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[c * rows_ + r]; }

    std::span<double> col(std::size_t c) { return {data_.data() + c * rows_, rows_}; }
    std::span<const double> col(std::size_t c) const { return {data_.data() + c * rows_, rows_}; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct LeastSquaresSolution {
    std::vector<double> coefficients;     // zero for dependent columns
    std::size_t rank = 0;
    std::vector<std::size_t> dependent;   // columns dropped as linearly dependent
    std::vector<double> residuals;
};

/// Minimizes ||X b - y|| with column-pivoted Householder QR on a column-scaled
/// copy of X. A column is treated as dependent once its pivot falls below
/// `relative_pivot_tol` times the leading pivot.
LeastSquaresSolution least_squares(const Matrix& x, std::span<const double> y,
                                   double relative_pivot_tol = 1e-10);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace carbontag::linalg
