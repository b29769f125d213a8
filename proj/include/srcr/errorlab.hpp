#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "srcr/config.hpp"
#include "srcr/pruning.hpp"
#include "srcr/quantization.hpp"
#include "srcr/synth.hpp"

#include "json.hpp"

namespace srcr {

// Per-run bookkeeping of the sequential quantizer: immediate column errors,
// accumulated-update norms, and the layer objective against the weights the
// quantizer consumed.
struct ErrorTrace {
    CompressionConfig config;
    std::vector<double> per_column_error;
    std::vector<double> delta_sq_norms;
    double layer_objective = 0.0;

    double total_error() const {
        double s = 0.0;
        for (double v : per_column_error) s += v;
        return s;
    }
    double total_delta_sq() const {
        double s = 0.0;
        for (double v : delta_sq_norms) s += v;
        return s;
    }
};

struct ExperimentOptions {
    std::size_t group_size = 128;
    std::size_t block_size = 128;
    double dampening = 0.01;
    std::size_t nf4_block_size = 64;
    std::optional<double> int8_outlier_threshold; // none: plain absmax
    bool identity_calibration = false; // replace generated X with I (exact diagonal Hessian)
};

namespace detail {

inline std::pair<DenseMatrix, DenseMatrix> layer_for(const SyntheticLayerSpec& spec,
                                                     const ExperimentOptions& opts) {
    auto [w, x] = generate_layer(spec);
    if (opts.identity_calibration) x = DenseMatrix::identity(spec.in_dim);
    return {std::move(w), std::move(x)};
}

} // namespace detail

struct RatioSummary {
    double min = 1.0;
    double median = 1.0;
    double max = 1.0;
};

inline RatioSummary summarize_ratios(std::vector<double> ratios) {
    if (ratios.empty()) return {};
    std::sort(ratios.begin(), ratios.end());
    RatioSummary s;
    s.min = ratios.front();
    s.max = ratios.back();
    std::size_t n = ratios.size();
    s.median = n % 2 == 1 ? ratios[n / 2] : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
    return s;
}

// Prune, then quantize the same pruned layer under both sequential modes:
// all weights updated (case A) versus mask-gated updates (case B).
struct CaseAbResult {
    SyntheticLayerSpec spec;
    CompressionConfig config;
    PruneReport prune;
    QuantizedLayer quant_a;
    QuantizedLayer quant_b;
    ErrorTrace trace_a;
    ErrorTrace trace_b;
    std::vector<double> ratio_per_column; // E_A / E_B, 0/0 reported as 1
    std::vector<std::size_t> kept_per_column;
    RatioSummary ratio_summary;
};

inline CaseAbResult case_ab_experiment(const SyntheticLayerSpec& spec, const Rational& sparsity,
                                       int bits, const ExperimentOptions& opts = {}) {
    if (sparsity < Rational(0) || sparsity >= Rational(1))
        throw validation_error("case_ab_experiment: sparsity must lie in [0,1)");
    auto [w, x] = detail::layer_for(spec, opts);

    CaseAbResult res;
    res.spec = spec;
    res.config = CompressionConfig::from_fields(
        sparsity, Rational(bits), sparsity == Rational(0) ? "none" : "unstructured");

    CompressionConfig prune_cfg = CompressionConfig::pruning_only(sparsity);
    res.prune = sparsegpt_prune(w, x, prune_cfg, opts.block_size, opts.dampening);

    const DenseMatrix& pruned = res.prune.pruned_weights;
    res.quant_a = gptq_quantize(pruned, x, bits, opts.group_size, opts.block_size,
                                opts.dampening, &res.prune.mask, GptqMaskMode::full_case_a);
    res.quant_b = gptq_quantize(pruned, x, bits, opts.group_size, opts.block_size,
                                opts.dampening, &res.prune.mask, GptqMaskMode::masked_case_b);

    auto fill_trace = [&](const QuantizedLayer& q, ErrorTrace& t) {
        t.config = res.config;
        t.per_column_error = q.per_column_error;
        t.delta_sq_norms = q.delta_sq_norms;
        t.layer_objective = layer_objective(pruned, q.dequantized, x);
    };
    fill_trace(res.quant_a, res.trace_a);
    fill_trace(res.quant_b, res.trace_b);

    res.ratio_per_column.resize(w.cols());
    res.kept_per_column.resize(w.cols());
    for (std::size_t c = 0; c < w.cols(); ++c) {
        double ea = res.trace_a.per_column_error[c];
        double eb = res.trace_b.per_column_error[c];
        res.ratio_per_column[c] = eb == 0.0
                                      ? (ea == 0.0 ? 1.0 : std::numeric_limits<double>::infinity())
                                      : ea / eb;
        res.kept_per_column[c] = res.prune.mask.column_popcount(c);
    }
    res.ratio_summary = summarize_ratios(res.ratio_per_column);
    return res;
}

// One row of the accumulated-update estimation: sequential quantizer vs a
// no-propagation quantizer on identical pruned weights. The estimate
// differences against round-to-nearest on the same grid, the one baseline
// whose intrinsic error matches term for term; the matched simple quantizer
// (NF4 at 4-bit, absmax int8 at 8-bit) is reported alongside.
struct DeltaEstimationRow {
    SyntheticLayerSpec spec;
    CompressionConfig config;
    std::string simple_scheme;
    double e_gptq_total = 0.0;
    double e_simple_total = 0.0;
    double e_rtn_total = 0.0;
    double e_rtn_model_total = 0.0;         // constant-noise model: sum over groups of n*scale^2/12
    double delta_estimate = 0.0;            // sum_j (E_gptq,j - E_rtn,j)
    double delta_estimate_vs_simple = 0.0;  // sum_j (E_gptq,j - E_simple,j)
    double delta_measured = 0.0;            // sum_j ||delta_j||^2 from the gptq trace
    std::vector<double> delta_estimate_per_column;
};

inline std::vector<Rational> default_delta_sparsities() {
    return {Rational(1, 4), Rational(1, 2)};
}
inline std::vector<int> default_delta_bits() { return {4, 8}; }

inline std::vector<DeltaEstimationRow> delta_estimation_experiment(
    const SyntheticLayerSpec& spec, std::vector<Rational> sparsity_levels = {},
    std::vector<int> bits_levels = {}, const ExperimentOptions& opts = {}) {
    if (sparsity_levels.empty()) sparsity_levels = default_delta_sparsities();
    if (bits_levels.empty()) bits_levels = default_delta_bits();

    // Matched pairs when the level lists line up (the default protocol
    // quantizes each bit-width before pruning and at its own sparsity),
    // otherwise the full cross product.
    std::vector<std::pair<int, Rational>> runs;
    auto add_run = [&](int b, const Rational& s) {
        for (const auto& r : runs)
            if (r.first == b && r.second == s) return;
        runs.emplace_back(b, s);
    };
    if (sparsity_levels.size() == bits_levels.size()) {
        for (std::size_t i = 0; i < bits_levels.size(); ++i) {
            add_run(bits_levels[i], Rational(0));
            add_run(bits_levels[i], sparsity_levels[i]);
        }
    } else {
        for (int b : bits_levels)
            for (const Rational& s : sparsity_levels) add_run(b, s);
    }

    auto [w, x] = detail::layer_for(spec, opts);

    std::vector<DeltaEstimationRow> rows;
    for (const auto& [bits, sparsity] : runs) {
        DeltaEstimationRow row;
        row.spec = spec;
        row.config = CompressionConfig::from_fields(
            sparsity, Rational(bits), sparsity == Rational(0) ? "none" : "unstructured");

        DenseMatrix pruned = w;
        if (sparsity > Rational(0)) {
            PruneReport pr = sparsegpt_prune(w, x, CompressionConfig::pruning_only(sparsity),
                                             opts.block_size, opts.dampening);
            pruned = pr.pruned_weights;
        }

        QuantizedLayer gq = gptq_quantize(pruned, x, bits, opts.group_size, opts.block_size,
                                          opts.dampening);
        QuantizedLayer simple;
        if (bits == 8) {
            simple = int8_absmax_quantize(pruned, opts.int8_outlier_threshold);
            row.simple_scheme = "int8_absmax";
        } else if (bits == 4) {
            simple = nf4_quantize(pruned, opts.nf4_block_size);
            row.simple_scheme = "nf4";
        } else {
            simple = rtn_quantize(pruned, bits, opts.group_size);
            row.simple_scheme = "rtn";
        }
        QuantizedLayer rtn = rtn_quantize(pruned, bits, opts.group_size);

        // per-group noise-model prediction next to the measured value, since
        // min-max scales vary group to group
        std::size_t groups_per_row = (w.cols() + opts.group_size - 1) / opts.group_size;
        for (std::size_t gi = 0; gi < rtn.grid.uniform_groups.size(); ++gi) {
            const UniformGroupParams& p = rtn.grid.uniform_groups[gi];
            if (p.passthrough) continue;
            std::size_t g = gi % groups_per_row;
            std::size_t count = std::min(opts.group_size, w.cols() - g * opts.group_size);
            row.e_rtn_model_total +=
                p.scale * p.scale / 12.0 * static_cast<double>(count);
        }

        row.delta_estimate_per_column.resize(w.cols());
        for (std::size_t c = 0; c < w.cols(); ++c) {
            row.e_gptq_total += gq.per_column_error[c];
            row.e_simple_total += simple.per_column_error[c];
            row.e_rtn_total += rtn.per_column_error[c];
            row.delta_estimate_per_column[c] =
                gq.per_column_error[c] - rtn.per_column_error[c];
            row.delta_estimate += row.delta_estimate_per_column[c];
            row.delta_estimate_vs_simple += gq.per_column_error[c] - simple.per_column_error[c];
            row.delta_measured += gq.delta_sq_norms[c];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// --- result serialization ------------------------------------------------

inline nlohmann::json spec_to_json(const SyntheticLayerSpec& spec) {
    return nlohmann::json{{"seed", spec.seed},
                          {"out_dim", spec.out_dim},
                          {"in_dim", spec.in_dim},
                          {"n_samples", spec.n_samples},
                          {"weight_dist", spec.weight_dist.to_string()},
                          {"calib_correlation", spec.calib_correlation}};
}

inline nlohmann::json to_json(const CaseAbResult& r) {
    return nlohmann::json{
        {"kind", "case_ab"},
        {"spec", spec_to_json(r.spec)},
        {"config", r.config.to_string()},
        {"e_gptq_total", r.trace_a.total_error()},
        {"e_case_b_total", r.trace_b.total_error()},
        {"delta_measured", r.trace_a.total_delta_sq()},
        {"delta_measured_case_b", r.trace_b.total_delta_sq()},
        {"layer_objective_case_a", r.trace_a.layer_objective},
        {"layer_objective_case_b", r.trace_b.layer_objective},
        {"ratio_summary",
         {{"min", r.ratio_summary.min},
          {"median", r.ratio_summary.median},
          {"max", r.ratio_summary.max}}},
    };
}

inline nlohmann::json to_json(const DeltaEstimationRow& r) {
    return nlohmann::json{
        {"kind", "delta_estimation"},
        {"spec", spec_to_json(r.spec)},
        {"config", r.config.to_string()},
        {"simple_scheme", r.simple_scheme},
        {"e_gptq_total", r.e_gptq_total},
        {"e_simple_total", r.e_simple_total},
        {"e_rtn_total", r.e_rtn_total},
        {"e_rtn_model_total", r.e_rtn_model_total},
        {"delta_estimate", r.delta_estimate},
        {"delta_estimate_vs_simple", r.delta_estimate_vs_simple},
        {"delta_measured", r.delta_measured},
        {"delta_estimate_per_column", r.delta_estimate_per_column},
    };
}

inline std::string experiment_csv_header() {
    return "kind,seed,out_dim,in_dim,n_samples,weight_dist,calib_correlation,config,"
           "e_gptq_total,e_simple_total,e_rtn_total,delta_estimate,delta_measured,"
           "ratio_min,ratio_median,ratio_max";
}

namespace detail {

inline std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string experiment_csv_prefix(const std::string& kind, const SyntheticLayerSpec& s,
                                         const CompressionConfig& c) {
    return kind + "," + std::to_string(s.seed) + "," + std::to_string(s.out_dim) + "," +
           std::to_string(s.in_dim) + "," + std::to_string(s.n_samples) + "," +
           s.weight_dist.to_string() + "," + csv_num(s.calib_correlation) + "," +
           c.to_string();
}

} // namespace detail

inline std::string to_csv_row(const CaseAbResult& r) {
    return detail::experiment_csv_prefix("case_ab", r.spec, r.config) + "," +
           detail::csv_num(r.trace_a.total_error()) + ",,,," +
           detail::csv_num(r.trace_a.total_delta_sq()) + "," +
           detail::csv_num(r.ratio_summary.min) + "," + detail::csv_num(r.ratio_summary.median) +
           "," + detail::csv_num(r.ratio_summary.max);
}

inline std::string to_csv_row(const DeltaEstimationRow& r) {
    return detail::experiment_csv_prefix("delta_estimation", r.spec, r.config) + "," +
           detail::csv_num(r.e_gptq_total) + "," + detail::csv_num(r.e_simple_total) + "," +
           detail::csv_num(r.e_rtn_total) + "," + detail::csv_num(r.delta_estimate) + "," +
           detail::csv_num(r.delta_measured) + ",,,";
}

} // namespace srcr
