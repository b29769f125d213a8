#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "srcr/common.hpp"

namespace srcr {

// Row-major dense matrix over 64-bit floats. Weights, calibration inputs,
// Hessians and their inverses all live here; quantized weights are stored
// dequantized so arithmetic stays in one precision.
class DenseMatrix {
public:
    DenseMatrix() = default;

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw validation_error("matrix data length " + std::to_string(data_.size()) +
                                   " != rows*cols " + std::to_string(rows_ * cols_));
        for (double v : data_) {
            if (!std::isfinite(v)) throw validation_error("matrix entry not finite");
        }
    }

    static DenseMatrix zeros(std::size_t rows, std::size_t cols) {
        DenseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.data_.assign(rows * cols, 0.0);
        return m;
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m = zeros(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    DenseMatrix transposed() const {
        DenseMatrix t = zeros(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t.at(c, r) = at(r, c);
        return t;
    }

    // Principal submatrix [r0, rows) x [c0, cols).
    DenseMatrix block_from(std::size_t r0, std::size_t c0) const {
        DenseMatrix b = zeros(rows_ - r0, cols_ - c0);
        for (std::size_t r = r0; r < rows_; ++r)
            for (std::size_t c = c0; c < cols_; ++c) b.at(r - r0, c - c0) = at(r, c);
        return b;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::fabs(v));
        return m;
    }

    friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Standard product with a fixed accumulation order (k ascending) so results
// are reproducible across runs.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw validation_error("matmul dimension mismatch: " + std::to_string(a.rows()) + "x" +
                               std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                               std::to_string(b.cols()));
    DenseMatrix c = DenseMatrix::zeros(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a.at(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            double* crow = c.row_ptr(i);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

// max |A - A^T| relative to max |A|.
inline double relative_asymmetry(const DenseMatrix& m) {
    double asym = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = i + 1; j < m.cols(); ++j)
            asym = std::max(asym, std::fabs(m.at(i, j) - m.at(j, i)));
    double scale = m.max_abs();
    return scale > 0.0 ? asym / scale : asym;
}

} // namespace srcr
