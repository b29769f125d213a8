#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srcr/linalg.hpp"
#include "srcr/mask.hpp"
#include "srcr/matrix.hpp"
#include "srcr/pruning.hpp" // layer_objective

namespace srcr {

enum class QuantScheme { uniform_asymmetric, nf4, int8_absmax };

inline std::string to_string(QuantScheme s) {
    switch (s) {
        case QuantScheme::uniform_asymmetric: return "uniform_asymmetric";
        case QuantScheme::nf4: return "nf4";
        case QuantScheme::int8_absmax: return "int8_absmax";
    }
    return "?";
}

// The 16 NormalFloat4 levels: asymmetric, includes exact zero, endpoints at
// +-1 so a block's absmax element reproduces exactly.
inline const double* nf4_levels() {
    static const double levels[16] = {
        -1.0,
        -0.6961928009986877,
        -0.5250730514526367,
        -0.39491748809814453,
        -0.28444138169288635,
        -0.18477343022823334,
        -0.09105003625154495,
        0.0,
        0.07958029955625534,
        0.16093020141124725,
        0.24611230194568634,
        0.33791524171829224,
        0.44070982933044434,
        0.5626170039176941,
        0.7229568362236023,
        1.0,
    };
    return levels;
}

// Per-group parameters of the asymmetric min-max grid. Constant groups pass
// values through untouched (scale 1) so they survive quantization exactly.
struct UniformGroupParams {
    double scale = 1.0;
    double zero_point = 0.0; // integer-valued except for passthrough groups
    bool passthrough = false;
};

// Grid description attached to a quantized layer. Group parameters are laid
// out per row then per group for row-wise schemes, flat per block for NF4.
struct QuantGrid {
    QuantScheme scheme = QuantScheme::uniform_asymmetric;
    int bits = 16;
    std::size_t group_size = 0;  // uniform grids
    std::size_t block_size = 0;  // nf4
    std::optional<double> outlier_threshold; // int8 column passthrough
    std::vector<UniformGroupParams> uniform_groups;
    std::vector<double> scales;                 // nf4 per-block absmax / int8 per-row 127/absmax
    std::vector<std::uint8_t> outlier_columns;  // int8: 1 = column passed through
};

// A quantized layer: dequantized weights, the grid that produced them, and
// the per-column bookkeeping of immediate errors and accumulated updates.
// `delta` holds, per entry, the update a weight had received by the time it
// was quantized (zero for one-shot quantizers).
struct QuantizedLayer {
    DenseMatrix dequantized;
    QuantGrid grid;
    std::vector<double> per_column_error;
    std::vector<double> delta_sq_norms;
    DenseMatrix delta;
};

namespace detail {

inline int max_level(int bits) { return (1 << bits) - 1; }

// Min-max parameters over the group values, optionally restricted to kept
// positions. An empty or constant selection becomes a passthrough group.
inline UniformGroupParams uniform_group_params(const double* values, const std::uint8_t* kept,
                                               std::size_t count, int bits) {
    bool any = false;
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        if (kept && !kept[i]) continue;
        double v = values[i];
        if (!any) {
            lo = hi = v;
            any = true;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    UniformGroupParams p;
    if (!any || hi == lo) {
        p.passthrough = true;
        return p;
    }
    p.scale = (hi - lo) / static_cast<double>(max_level(bits));
    p.zero_point = round_half_away(-lo / p.scale);
    return p;
}

inline double uniform_quantize_value(double v, const UniformGroupParams& p, int bits) {
    if (p.passthrough) return v;
    double q = round_half_away(v / p.scale) + p.zero_point;
    double maxq = static_cast<double>(max_level(bits));
    q = std::min(std::max(q, 0.0), maxq);
    return (q - p.zero_point) * p.scale;
}

} // namespace detail

// Round-to-nearest on an asymmetric min-max grid per group of `group_size`
// consecutive row entries. No error propagation; this is the simple
// baseline the sequential quantizer is measured against.
inline QuantizedLayer rtn_quantize(const DenseMatrix& w, int bits, std::size_t group_size) {
    if (bits != 2 && bits != 3 && bits != 4 && bits != 8)
        throw validation_error("rtn_quantize: bits must be one of {2,3,4,8}, got " +
                               std::to_string(bits));
    if (group_size == 0) throw validation_error("rtn_quantize: empty groups");

    QuantizedLayer out;
    out.dequantized = w;
    out.delta = DenseMatrix::zeros(w.rows(), w.cols());
    out.grid.scheme = QuantScheme::uniform_asymmetric;
    out.grid.bits = bits;
    out.grid.group_size = group_size;

    for (std::size_t r = 0; r < w.rows(); ++r) {
        for (std::size_t g = 0; g < w.cols(); g += group_size) {
            std::size_t count = std::min(group_size, w.cols() - g);
            UniformGroupParams p =
                detail::uniform_group_params(w.row_ptr(r) + g, nullptr, count, bits);
            out.grid.uniform_groups.push_back(p);
            for (std::size_t k = 0; k < count; ++k)
                out.dequantized.at(r, g + k) =
                    detail::uniform_quantize_value(w.at(r, g + k), p, bits);
        }
    }

    out.per_column_error.assign(w.cols(), 0.0);
    out.delta_sq_norms.assign(w.cols(), 0.0);
    for (std::size_t c = 0; c < w.cols(); ++c) {
        double e = 0.0;
        for (std::size_t r = 0; r < w.rows(); ++r) {
            double d = w.at(r, c) - out.dequantized.at(r, c);
            e += d * d;
        }
        out.per_column_error[c] = e;
    }
    return out;
}

// Blockwise NormalFloat4: absmax scaling to [-1,1], nearest of the 16 fixed
// levels, rescale. Blocks run over the row-major flattening.
inline QuantizedLayer nf4_quantize(const DenseMatrix& w, std::size_t block_size = 64) {
    if (block_size == 0) throw validation_error("nf4_quantize: empty blocks");
    QuantizedLayer out;
    out.dequantized = w;
    out.delta = DenseMatrix::zeros(w.rows(), w.cols());
    out.grid.scheme = QuantScheme::nf4;
    out.grid.bits = 4;
    out.grid.block_size = block_size;

    const double* levels = nf4_levels();
    const std::size_t total = w.size();
    for (std::size_t b = 0; b < total; b += block_size) {
        std::size_t count = std::min(block_size, total - b);
        double absmax = 0.0;
        for (std::size_t k = 0; k < count; ++k)
            absmax = std::max(absmax, std::fabs(w.data()[b + k]));
        if (absmax == 0.0) {
            out.grid.scales.push_back(1.0);
            continue; // all-zero block: outputs stay 0
        }
        out.grid.scales.push_back(absmax);
        for (std::size_t k = 0; k < count; ++k) {
            double u = w.data()[b + k] / absmax;
            int best = 0;
            double best_err = std::fabs(u - levels[0]);
            for (int i = 1; i < 16; ++i) {
                double err = std::fabs(u - levels[i]);
                if (err < best_err) {
                    best = i;
                    best_err = err;
                }
            }
            out.dequantized.data()[b + k] = levels[best] * absmax;
        }
    }

    out.per_column_error.assign(w.cols(), 0.0);
    out.delta_sq_norms.assign(w.cols(), 0.0);
    for (std::size_t c = 0; c < w.cols(); ++c) {
        double e = 0.0;
        for (std::size_t r = 0; r < w.rows(); ++r) {
            double d = w.at(r, c) - out.dequantized.at(r, c);
            e += d * d;
        }
        out.per_column_error[c] = e;
    }
    return out;
}

// Row-wise absmax int8: scale = 127/absmax, symmetric integer levels. When
// an outlier threshold is set, any column containing |w| above it is passed
// through unquantized and excluded from the scales.
inline QuantizedLayer int8_absmax_quantize(const DenseMatrix& w,
                                           std::optional<double> outlier_threshold = {}) {
    QuantizedLayer out;
    out.dequantized = w;
    out.delta = DenseMatrix::zeros(w.rows(), w.cols());
    out.grid.scheme = QuantScheme::int8_absmax;
    out.grid.bits = 8;
    out.grid.outlier_threshold = outlier_threshold;
    out.grid.outlier_columns.assign(w.cols(), 0);

    if (outlier_threshold) {
        for (std::size_t c = 0; c < w.cols(); ++c)
            for (std::size_t r = 0; r < w.rows(); ++r)
                if (std::fabs(w.at(r, c)) > *outlier_threshold) {
                    out.grid.outlier_columns[c] = 1;
                    break;
                }
    }

    for (std::size_t r = 0; r < w.rows(); ++r) {
        double absmax = 0.0;
        for (std::size_t c = 0; c < w.cols(); ++c)
            if (!out.grid.outlier_columns[c]) absmax = std::max(absmax, std::fabs(w.at(r, c)));
        double scale = absmax > 0.0 ? 127.0 / absmax : 1.0;
        out.grid.scales.push_back(scale);
        for (std::size_t c = 0; c < w.cols(); ++c) {
            if (out.grid.outlier_columns[c]) continue; // bit-identical passthrough
            if (absmax == 0.0) {
                out.dequantized.at(r, c) = 0.0;
                continue;
            }
            double q = round_half_away(w.at(r, c) * scale);
            q = std::min(std::max(q, -127.0), 127.0);
            out.dequantized.at(r, c) = q / scale;
        }
    }

    out.per_column_error.assign(w.cols(), 0.0);
    out.delta_sq_norms.assign(w.cols(), 0.0);
    for (std::size_t c = 0; c < w.cols(); ++c) {
        double e = 0.0;
        for (std::size_t r = 0; r < w.rows(); ++r) {
            double d = w.at(r, c) - out.dequantized.at(r, c);
            e += d * d;
        }
        out.per_column_error[c] = e;
    }
    return out;
}

enum class GptqMaskMode { full_case_a, masked_case_b };

namespace detail {

// Column-level quantizer abstraction so the sequential engine can run on
// the production min-max grid or on test grids (plain integer lattice).
class ColumnGrid {
public:
    virtual ~ColumnGrid() = default;
    // Called when the sweep enters `col` for `row`; `row_vals` are the
    // current (updated) weights, `kept` the mask row or null.
    virtual void enter_column(std::size_t row, std::size_t col, const double* row_vals,
                              const std::uint8_t* kept, std::size_t cols) = 0;
    virtual double quantize(double v) const = 0;
    virtual void finish(QuantGrid& grid) const = 0;
};

class UniformColumnGrid final : public ColumnGrid {
public:
    UniformColumnGrid(int bits, std::size_t group_size) : bits_(bits), group_size_(group_size) {}

    void enter_column(std::size_t, std::size_t col, const double* row_vals,
                      const std::uint8_t* kept, std::size_t cols) override {
        if (col % group_size_ != 0) return;
        std::size_t count = std::min(group_size_, cols - col);
        params_ = uniform_group_params(row_vals + col, kept ? kept + col : nullptr, count, bits_);
        recorded_.push_back(params_);
    }

    double quantize(double v) const override {
        return uniform_quantize_value(v, params_, bits_);
    }

    void finish(QuantGrid& grid) const override {
        grid.scheme = QuantScheme::uniform_asymmetric;
        grid.bits = bits_;
        grid.group_size = group_size_;
        grid.uniform_groups = recorded_;
    }

private:
    int bits_;
    std::size_t group_size_;
    UniformGroupParams params_;
    std::vector<UniformGroupParams> recorded_;
};

// Nearest integer grid; exists for brute-force comparisons at toy scale.
class IntegerColumnGrid final : public ColumnGrid {
public:
    void enter_column(std::size_t, std::size_t, const double*, const std::uint8_t*,
                      std::size_t) override {}
    double quantize(double v) const override { return round_half_away(v); }
    void finish(QuantGrid& grid) const override {
        grid.scheme = QuantScheme::uniform_asymmetric;
        grid.bits = 0;
        grid.group_size = 0;
    }
};

struct GptqBlockFactor {
    std::size_t i1 = 0;
    std::size_t i2 = 0;
    DenseMatrix lf; // lower Cholesky factor of (H[i1:, i1:])^-1
};

// Refactors the trailing inverse Hessian at each block boundary. `keep`
// masks coordinates out of the Hessian (rows/columns zeroed, diagonal
// kept), so no error ever routes through a pruned weight.
inline std::vector<GptqBlockFactor> gptq_block_factors(const DenseMatrix& h_damped,
                                                       std::size_t block_size,
                                                       const std::uint8_t* keep) {
    const std::size_t n = h_damped.rows();
    DenseMatrix h = h_damped;
    if (keep) {
        for (std::size_t i = 0; i < n; ++i) {
            if (keep[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                h.at(i, j) = 0.0;
                h.at(j, i) = 0.0;
            }
        }
    }
    std::vector<GptqBlockFactor> factors;
    for (std::size_t i1 = 0; i1 < n; i1 += block_size) {
        GptqBlockFactor f;
        f.i1 = i1;
        f.i2 = std::min(i1 + block_size, n);
        DenseMatrix hsub = h.block_from(i1, i1);
        f.lf = cholesky(spd_inverse_from_cholesky(cholesky(hsub)));
        factors.push_back(std::move(f));
    }
    return factors;
}

inline QuantizedLayer gptq_run(const DenseMatrix& w, const DenseMatrix& x,
                               std::size_t block_size, double dampening,
                               const SparsityMask* mask, GptqMaskMode mode, ColumnGrid& grid) {
    const std::size_t n = w.cols();
    const std::size_t rows = w.rows();
    const bool masked = mode == GptqMaskMode::masked_case_b;

    DenseMatrix h = matmul(x, x.transposed());
    for (double& v : h.data()) v *= 2.0;
    h = dampened(h, dampening);

    QuantizedLayer out;
    out.dequantized = w;
    out.delta = DenseMatrix::zeros(rows, n);
    out.per_column_error.assign(n, 0.0);
    out.delta_sq_norms.assign(n, 0.0);

    // Case A shares one factor set across rows; case B refactors per row
    // because each row carries its own mask.
    std::vector<GptqBlockFactor> shared;
    if (!masked) shared = gptq_block_factors(h, block_size, nullptr);

    std::vector<std::uint8_t> keep_row(n, 1);
    std::vector<double> work(n);

    for (std::size_t r = 0; r < rows; ++r) {
        const std::uint8_t* kept = nullptr;
        const std::vector<GptqBlockFactor>* factors = &shared;
        std::vector<GptqBlockFactor> own;
        if (masked) {
            for (std::size_t c = 0; c < n; ++c) keep_row[c] = mask->at(r, c);
            kept = keep_row.data();
            own = gptq_block_factors(h, block_size, kept);
            factors = &own;
        }

        for (std::size_t c = 0; c < n; ++c) {
            work[c] = w.at(r, c);
            if (kept && !kept[c]) {
                work[c] = 0.0; // pruned coordinates are defined to hold zero
                out.dequantized.at(r, c) = 0.0;
            }
        }

        for (const GptqBlockFactor& f : *factors) {
            const std::size_t rem = n - f.i1;
            for (std::size_t j = 0; j < f.i2 - f.i1; ++j) {
                const std::size_t col = f.i1 + j;
                grid.enter_column(r, col, work.data(), kept, n);
                if (kept && !kept[col]) continue; // never assigned a level, stays 0

                const double d = f.lf.at(j, j);
                const double wv = work[col];
                const double q = grid.quantize(wv);
                const double dl = wv - w.at(r, col);

                out.dequantized.at(r, col) = q;
                out.delta.at(r, col) = dl;
                out.delta_sq_norms[col] += dl * dl;
                out.per_column_error[col] += (wv - q) * (wv - q);

                const double err = (wv - q) / d;
                if (err != 0.0) {
                    for (std::size_t k = j + 1; k < rem; ++k)
                        work[f.i1 + k] -= err * f.lf.at(k, j);
                }
                work[col] = q;
            }
        }
    }

    grid.finish(out.grid);
    return out;
}

} // namespace detail

// Sequential second-order quantizer. Columns are processed left to right;
// each column is rounded on its grid and the residual is pushed into the
// not-yet-processed columns through the inverse-Hessian factor, which is
// refactored at every block boundary.
//
// full_case_a treats pruned positions as ordinary zero weights: updates may
// move them and they are quantized like anything else. masked_case_b gates
// everything through the mask: pruned positions keep exact zero, produce no
// error, and the Hessian is masked per row so corrections only flow between
// kept weights.
inline QuantizedLayer gptq_quantize(const DenseMatrix& w, const DenseMatrix& x, int bits,
                                    std::size_t group_size = 128, std::size_t block_size = 128,
                                    double dampening = 0.01,
                                    const SparsityMask* mask = nullptr,
                                    GptqMaskMode mode = GptqMaskMode::full_case_a) {
    if (w.cols() != x.rows())
        throw validation_error("gptq_quantize: weights are " + std::to_string(w.rows()) + "x" +
                               std::to_string(w.cols()) + " but calibration has " +
                               std::to_string(x.rows()) + " features");
    if (group_size == 0 || block_size == 0)
        throw validation_error("gptq_quantize: zero group or block size");
    if (mode == GptqMaskMode::masked_case_b) {
        if (!mask) throw validation_error("gptq_quantize: case B requires a mask");
        if (mask->rows != w.rows() || mask->cols != w.cols())
            throw validation_error("gptq_quantize: mask shape mismatch");
    }

    detail::UniformColumnGrid grid(bits, group_size);
    return detail::gptq_run(w, x, block_size, dampening, mask, mode, grid);
}

// Test-support variant of the sequential quantizer on the plain integer
// lattice, for exhaustive comparisons at toy sizes.
inline QuantizedLayer gptq_quantize_integer_grid(const DenseMatrix& w, const DenseMatrix& x,
                                                 std::size_t block_size = 128,
                                                 double dampening = 0.0) {
    if (w.cols() != x.rows()) throw validation_error("gptq integer grid: dimension mismatch");
    detail::IntegerColumnGrid grid;
    return detail::gptq_run(w, x, block_size, dampening, nullptr, GptqMaskMode::full_case_a,
                            grid);
}

} // namespace srcr
