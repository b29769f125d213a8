#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "srcr/matrix.hpp"

namespace srcr {

// Lower-triangular Cholesky factor L with L*L^T = m. No pivoting; callers
// condition via dampening. Fails naming the offending pivot.
inline DenseMatrix cholesky(const DenseMatrix& m) {
    if (m.rows() != m.cols()) throw validation_error("cholesky: matrix not square");
    if (relative_asymmetry(m) > 1e-9)
        throw validation_error("cholesky: matrix not symmetric within 1e-9 relative");
    const std::size_t n = m.rows();
    DenseMatrix l = DenseMatrix::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < j; ++k) sum += l.at(i, k) * l.at(j, k);
            if (i == j) {
                double d = m.at(i, i) - sum;
                if (d <= 0.0)
                    throw numerical_error("cholesky: matrix not positive definite at pivot " +
                                          std::to_string(i));
                l.at(i, i) = std::sqrt(d);
            } else {
                l.at(i, j) = (m.at(i, j) - sum) / l.at(j, j);
            }
        }
    }
    return l;
}

namespace detail {

// Solve L*y = b in place (L lower-triangular).
inline void forward_substitute(const DenseMatrix& l, std::vector<double>& b) {
    const std::size_t n = l.rows();
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        const double* row = l.row_ptr(i);
        for (std::size_t j = 0; j < i; ++j) s -= row[j] * b[j];
        b[i] = s / row[i];
    }
}

// Solve L^T*x = b in place.
inline void backward_substitute_transposed(const DenseMatrix& l, std::vector<double>& b) {
    const std::size_t n = l.rows();
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= l.at(j, i) * b[j];
        b[i] = s / l.at(i, i);
    }
}

// Inverse of an SPD matrix from its Cholesky factor, symmetrized.
inline DenseMatrix spd_inverse_from_cholesky(const DenseMatrix& l) {
    const std::size_t n = l.rows();
    DenseMatrix inv = DenseMatrix::zeros(n, n);
    std::vector<double> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(col.begin(), col.end(), 0.0);
        col[j] = 1.0;
        forward_substitute(l, col);
        backward_substitute_transposed(l, col);
        for (std::size_t i = 0; i < n; ++i) inv.at(i, j) = col[i];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.5 * (inv.at(i, j) + inv.at(j, i));
            inv.at(i, j) = v;
            inv.at(j, i) = v;
        }
    return inv;
}

} // namespace detail

inline double mean_diagonal(const DenseMatrix& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s += m.at(i, i);
    return m.rows() > 0 ? s / static_cast<double>(m.rows()) : 0.0;
}

// Adds lambda*I with lambda = dampening * mean(diag(m)) before factoring.
inline DenseMatrix dampened(const DenseMatrix& m, double dampening) {
    DenseMatrix d = m;
    double lambda = dampening * mean_diagonal(m);
    for (std::size_t i = 0; i < d.rows(); ++i) d.at(i, i) += lambda;
    return d;
}

// (m + lambda*I)^-1 with lambda = dampening * mean(diag(m)). The result is
// exactly symmetric.
inline DenseMatrix invert_psd(const DenseMatrix& m, double dampening) {
    if (m.rows() != m.cols()) throw validation_error("invert_psd: matrix not square");
    if (relative_asymmetry(m) > 1e-9)
        throw validation_error("invert_psd: matrix not symmetric within 1e-9 relative");
    DenseMatrix d = dampened(m, dampening);
    DenseMatrix l;
    try {
        l = cholesky(d);
    } catch (const numerical_error& e) {
        throw numerical_error(std::string("invert_psd: not invertible after dampening (") +
                              e.what() + ")");
    }
    return detail::spd_inverse_from_cholesky(l);
}

} // namespace srcr
