#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "srcr/linalg.hpp"
#include "srcr/mask.hpp"
#include "srcr/matrix.hpp"

namespace srcr {

struct PruneReport {
    SparsityMask mask;
    DenseMatrix pruned_weights;       // post-compensation weights, exact zeros where pruned
    double layer_objective_delta = 0; // ||W X - W_pruned X||_F^2
    double achieved_sparsity = 0;
};

// Squared Frobenius norm of (w - w_hat) X: the layer reconstruction
// objective every compression step here tries to keep small.
inline double layer_objective(const DenseMatrix& w, const DenseMatrix& w_hat,
                              const DenseMatrix& x) {
    if (w.rows() != w_hat.rows() || w.cols() != w_hat.cols())
        throw validation_error("layer_objective: weight shapes differ");
    if (w.cols() != x.rows())
        throw validation_error("layer_objective: weights are " + std::to_string(w.rows()) + "x" +
                               std::to_string(w.cols()) + " but inputs have " +
                               std::to_string(x.rows()) + " features");
    DenseMatrix diff = DenseMatrix::zeros(w.rows(), w.cols());
    for (std::size_t i = 0; i < diff.size(); ++i)
        diff.data()[i] = w.data()[i] - w_hat.data()[i];
    DenseMatrix prod = matmul(diff, x);
    double s = 0.0;
    for (double v : prod.data()) s += v * v;
    return s;
}

namespace detail {

// Zeros to assign per row through column `cols_done`, so the running total
// tracks round(sparsity * cols) however the blocks fall.
inline std::size_t cumulative_zero_target(const Rational& sparsity, std::size_t cols_done) {
    long long num = sparsity.num();
    long long den = sparsity.den();
    long long scaled = 2 * num * static_cast<long long>(cols_done) + den;
    return static_cast<std::size_t>(scaled / (2 * den)); // round-half-up of s*cols_done
}

// Smallest-score selection with deterministic lower-index tie-breaking.
// Returns the chosen local indices (not sorted).
inline std::vector<std::size_t> pick_smallest(const std::vector<double>& scores,
                                              std::size_t count) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });
    idx.resize(std::min(count, idx.size()));
    return idx;
}

inline void check_prune_inputs(const DenseMatrix& w, const CompressionConfig& target) {
    target.validate();
    if (target.pattern == PatternKind::nm) {
        std::size_t m = static_cast<std::size_t>(target.nm->m_group);
        if (w.cols() % m != 0)
            throw validation_error("n:m group of " + std::to_string(m) +
                                   " does not divide row length " + std::to_string(w.cols()));
    }
}

} // namespace detail

// Per-row smallest-magnitude pruning honoring the target pattern. No weight
// updates; this is the baseline the compensated pruner must beat.
inline SparsityMask magnitude_mask(const DenseMatrix& w, const CompressionConfig& target) {
    detail::check_prune_inputs(w, target);
    SparsityMask mask = SparsityMask::ones(w.rows(), w.cols());
    if (target.sparsity == Rational(0)) return mask;

    for (std::size_t r = 0; r < w.rows(); ++r) {
        if (target.pattern == PatternKind::nm) {
            std::size_t m = static_cast<std::size_t>(target.nm->m_group);
            std::size_t np = static_cast<std::size_t>(target.nm->n_pruned);
            for (std::size_t g = 0; g < w.cols(); g += m) {
                std::vector<double> mag(m);
                for (std::size_t k = 0; k < m; ++k) mag[k] = std::fabs(w.at(r, g + k));
                for (std::size_t k : detail::pick_smallest(mag, np)) mask.at(r, g + k) = 0;
            }
        } else {
            std::size_t quota = detail::cumulative_zero_target(target.sparsity, w.cols());
            std::vector<double> mag(w.cols());
            for (std::size_t c = 0; c < w.cols(); ++c) mag[c] = std::fabs(w.at(r, c));
            for (std::size_t c : detail::pick_smallest(mag, quota)) mask.at(r, c) = 0;
        }
    }
    return mask;
}

// One-shot pruning with second-order error compensation. Columns are
// processed left to right in blocks; at each block boundary the trailing
// inverse Hessian is refactored, prune candidates are chosen per row by the
// saliency w^2 / [H_F^-1]_jj (smallest pruned), and each zeroed weight's
// error is distributed over the not-yet-processed columns through the
// factor rows. With identity calibration this degenerates to magnitude
// pruning with no updates.
inline PruneReport sparsegpt_prune(const DenseMatrix& w, const DenseMatrix& x,
                                   const CompressionConfig& target, std::size_t block_size = 128,
                                   double dampening = 0.01) {
    detail::check_prune_inputs(w, target);
    if (w.cols() != x.rows())
        throw validation_error("sparsegpt_prune: weights are " + std::to_string(w.rows()) + "x" +
                               std::to_string(w.cols()) + " but calibration has " +
                               std::to_string(x.rows()) + " features");
    if (block_size == 0) throw validation_error("sparsegpt_prune: zero block size");

    PruneReport report;
    report.mask = SparsityMask::ones(w.rows(), w.cols());
    report.pruned_weights = w;
    if (target.sparsity == Rational(0)) {
        report.layer_objective_delta = 0.0;
        report.achieved_sparsity = 0.0;
        return report;
    }

    const std::size_t n = w.cols();
    const std::size_t rows = w.rows();

    // H = 2 X X^T, dampened once up front.
    DenseMatrix h = matmul(x, x.transposed());
    for (double& v : h.data()) v *= 2.0;
    h = dampened(h, dampening);

    // Keep N:M groups inside one block.
    std::size_t eff_block = block_size;
    if (target.pattern == PatternKind::nm) {
        std::size_t m = static_cast<std::size_t>(target.nm->m_group);
        eff_block = std::max(m, block_size - block_size % m);
    }

    DenseMatrix work = w; // continuously updated weights
    std::vector<std::size_t> zeros_assigned(rows, 0);

    for (std::size_t i1 = 0; i1 < n; i1 += eff_block) {
        const std::size_t i2 = std::min(i1 + eff_block, n);
        const std::size_t count = i2 - i1;
        const std::size_t rem = n - i1;

        // Lower Cholesky factor of the trailing inverse Hessian; its columns
        // carry the compensation coefficients, its squared diagonal the
        // saliency denominators for the sequential sweep.
        DenseMatrix hsub = h.block_from(i1, i1);
        DenseMatrix hinv = detail::spd_inverse_from_cholesky(cholesky(hsub));
        DenseMatrix lf = cholesky(hinv);

        // Selection (block-local, from the weights as they stand now).
        for (std::size_t r = 0; r < rows; ++r) {
            if (target.pattern == PatternKind::nm) {
                std::size_t m = static_cast<std::size_t>(target.nm->m_group);
                std::size_t np = static_cast<std::size_t>(target.nm->n_pruned);
                for (std::size_t g = 0; g + m <= count; g += m) {
                    std::vector<double> sal(m);
                    for (std::size_t k = 0; k < m; ++k) {
                        double wv = work.at(r, i1 + g + k);
                        double d = lf.at(g + k, g + k);
                        sal[k] = wv * wv / (d * d);
                    }
                    for (std::size_t k : detail::pick_smallest(sal, np))
                        report.mask.at(r, i1 + g + k) = 0;
                }
            } else {
                std::size_t want = detail::cumulative_zero_target(target.sparsity, i2);
                std::size_t quota =
                    want > zeros_assigned[r] ? want - zeros_assigned[r] : 0;
                quota = std::min(quota, count);
                std::vector<double> sal(count);
                for (std::size_t j = 0; j < count; ++j) {
                    double wv = work.at(r, i1 + j);
                    double d = lf.at(j, j);
                    sal[j] = wv * wv / (d * d);
                }
                for (std::size_t j : detail::pick_smallest(sal, quota))
                    report.mask.at(r, i1 + j) = 0;
                zeros_assigned[r] += quota;
            }
        }

        // Sweep: zero pruned columns and push their error into everything
        // that still awaits processing. Frozen columns never change.
        for (std::size_t j = 0; j < count; ++j) {
            double d = lf.at(j, j);
            for (std::size_t r = 0; r < rows; ++r) {
                if (report.mask.at(r, i1 + j) != 0) continue;
                double err = work.at(r, i1 + j) / d;
                if (err != 0.0) {
                    double* wrow = work.row_ptr(r);
                    for (std::size_t k = j + 1; k < rem; ++k)
                        wrow[i1 + k] -= err * lf.at(k, j);
                }
                work.at(r, i1 + j) = 0.0;
            }
        }
    }

    // Pruned positions end the sweep at exact zero; enforce it bitwise.
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < n; ++c)
            if (report.mask.at(r, c) == 0) work.at(r, c) = 0.0;

    report.pruned_weights = std::move(work);
    report.layer_objective_delta = layer_objective(w, report.pruned_weights, x);
    report.achieved_sparsity = 1.0 - report.mask.density();
    return report;
}

} // namespace srcr
