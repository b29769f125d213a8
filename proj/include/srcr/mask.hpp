#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "srcr/config.hpp"
#include "srcr/matrix.hpp"

namespace srcr {

// Binary keep/prune mask aligned with a weight matrix: 1 = kept, 0 = pruned.
struct SparsityMask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> bits; // row-major

    static SparsityMask ones(std::size_t rows, std::size_t cols) {
        return SparsityMask{rows, cols, std::vector<std::uint8_t>(rows * cols, 1)};
    }

    std::uint8_t& at(std::size_t r, std::size_t c) { return bits[r * cols + c]; }
    std::uint8_t at(std::size_t r, std::size_t c) const { return bits[r * cols + c]; }

    std::size_t count_ones() const {
        std::size_t n = 0;
        for (std::uint8_t b : bits) n += b;
        return n;
    }

    std::size_t column_popcount(std::size_t c) const {
        std::size_t n = 0;
        for (std::size_t r = 0; r < rows; ++r) n += at(r, c);
        return n;
    }

    double density() const {
        return bits.empty() ? 1.0
                            : static_cast<double>(count_ones()) / static_cast<double>(bits.size());
    }

    DenseMatrix to_matrix() const {
        DenseMatrix m = DenseMatrix::zeros(rows, cols);
        for (std::size_t i = 0; i < bits.size(); ++i) m.data()[i] = bits[i] ? 1.0 : 0.0;
        return m;
    }

    static SparsityMask from_matrix(const DenseMatrix& m) {
        SparsityMask mask{m.rows(), m.cols(), std::vector<std::uint8_t>(m.size(), 0)};
        for (std::size_t i = 0; i < m.size(); ++i) {
            double v = m.data()[i];
            if (v != 0.0 && v != 1.0)
                throw validation_error("mask matrix entries must be 0 or 1");
            mask.bits[i] = v != 0.0 ? 1 : 0;
        }
        return mask;
    }
};

struct MaskGroupViolation {
    std::size_t row = 0;
    std::size_t group_start = 0; // column of the group's first element
    std::size_t zeros_found = 0;
    std::size_t zeros_expected = 0;
};

// Violations are data, not errors: the report lists every offending group
// (N:M) and whether the overall density matches the target.
struct MaskValidationReport {
    bool pattern_ok = true;
    bool density_ok = true;
    double density = 1.0;
    double target_density = 1.0;
    std::vector<MaskGroupViolation> violations;

    bool ok() const { return pattern_ok && density_ok; }
};

inline MaskValidationReport validate_mask(const SparsityMask& mask, const CompressionConfig& target) {
    target.validate();
    MaskValidationReport report;
    report.density = mask.density();
    report.target_density = 1.0 - target.sparsity.to_double();

    if (target.pattern == PatternKind::nm) {
        const NMPattern& nm = *target.nm;
        std::size_t m = static_cast<std::size_t>(nm.m_group);
        if (mask.cols % m != 0) {
            report.pattern_ok = false;
            report.density_ok = false;
            return report;
        }
        for (std::size_t r = 0; r < mask.rows; ++r) {
            for (std::size_t g = 0; g < mask.cols; g += m) {
                std::size_t zeros = 0;
                for (std::size_t k = 0; k < m; ++k) zeros += mask.at(r, g + k) == 0 ? 1 : 0;
                if (zeros != static_cast<std::size_t>(nm.n_pruned)) {
                    report.pattern_ok = false;
                    report.violations.push_back(
                        {r, g, zeros, static_cast<std::size_t>(nm.n_pruned)});
                }
            }
        }
        report.density_ok = report.pattern_ok; // exact compliance implies exact density
        return report;
    }

    // Unstructured / none: allow one element of slack per row.
    double expected_zeros = target.sparsity.to_double() * static_cast<double>(mask.bits.size());
    double actual_zeros = static_cast<double>(mask.bits.size() - mask.count_ones());
    report.density_ok =
        std::fabs(actual_zeros - expected_zeros) <= static_cast<double>(mask.rows) + 1e-9;
    report.pattern_ok = true;
    return report;
}

inline unsigned long long binomial(unsigned m, unsigned n) {
    if (n > m) return 0;
    if (n > m - n) n = m - n;
    unsigned long long c = 1;
    for (unsigned i = 1; i <= n; ++i) {
        c = c * (m - n + i) / i; // exact: product of i consecutive ints divisible by i!
    }
    return c;
}

// Mask storage cost per weight for the most efficient encoding: a full
// bitmap (1 bit/weight) for unstructured masks, log2(C(m,n))/m for N:M
// groups, nothing when there is no pruning.
inline double mask_overhead_bits(const CompressionConfig& config) {
    config.validate();
    switch (config.pattern) {
        case PatternKind::none: return 0.0;
        case PatternKind::unstructured: return 1.0;
        case PatternKind::nm: {
            const NMPattern& nm = *config.nm;
            if (nm.n_pruned == 0 || nm.n_pruned == nm.m_group) return 0.0;
            return std::log2(static_cast<double>(binomial(
                       static_cast<unsigned>(nm.m_group), static_cast<unsigned>(nm.n_pruned)))) /
                   static_cast<double>(nm.m_group);
        }
    }
    return 0.0;
}

inline double mask_overhead_bits(const NMPattern& nm) {
    nm.validate();
    if (nm.n_pruned == 0 || nm.n_pruned == nm.m_group) return 0.0;
    return std::log2(static_cast<double>(
               binomial(static_cast<unsigned>(nm.m_group), static_cast<unsigned>(nm.n_pruned)))) /
           static_cast<double>(nm.m_group);
}

} // namespace srcr
