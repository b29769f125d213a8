#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "srcr/config.hpp"

namespace srcr {

// Fraction of information-bearing bits removed relative to the 16-bit
// baseline, ignoring mask and scale overheads. Pruning-only configs give the
// sparsity itself, quantization-only 1 - q/16, joint 1 - (q/16)(1 - s); the
// single joint expression covers all three cases exactly.
inline Rational theoretical_compression_rate(const CompressionConfig& config) {
    config.validate();
    return Rational(1) - (config.bits / Rational(16)) * (Rational(1) - config.sparsity);
}

struct TcrTable {
    std::vector<Rational> bit_widths;  // grid rows
    std::vector<Rational> sparsities;  // grid columns
    std::vector<std::vector<Rational>> cells;
};

// Default rate grid: bits {16,8,4,3,2} x sparsities {0,1/4,1/3,1/2}.
inline std::vector<Rational> default_table_bits() {
    return {Rational(16), Rational(8), Rational(4), Rational(3), Rational(2)};
}
inline std::vector<Rational> default_table_sparsities() {
    return {Rational(0), Rational(1, 4), Rational(1, 3), Rational(1, 2)};
}

inline TcrTable tcr_table(const std::vector<Rational>& sparsities,
                          const std::vector<Rational>& bit_widths) {
    if (sparsities.empty() || bit_widths.empty())
        throw validation_error("tcr_table needs non-empty sparsity and bit-width lists");
    TcrTable t;
    t.bit_widths = bit_widths;
    t.sparsities = sparsities;
    for (const Rational& b : bit_widths) {
        std::vector<Rational> row;
        for (const Rational& s : sparsities) {
            CompressionConfig c;
            c.sparsity = s;
            c.bits = b;
            c.pattern = s == Rational(0) ? PatternKind::none : PatternKind::unstructured;
            row.push_back(theoretical_compression_rate(c));
        }
        t.cells.push_back(std::move(row));
    }
    return t;
}

// One task's before/after scores on the 0-100 scale.
struct TaskScore {
    std::string task;
    double original = 0.0;
    double compressed = 0.0;
    double original_stderr = 0.0;
    double compressed_stderr = 0.0;
};

// compressed/original; may exceed 1 since light compression sometimes helps.
inline double retention_rate(const TaskScore& s) {
    if (s.original <= 0.0)
        throw validation_error("retention undefined: original score is zero for task '" +
                               s.task + "'");
    return s.compressed / s.original;
}

// First-order ratio rule, written so a zero compressed score stays finite:
// sigma_R^2 = (sigma_c/P_o)^2 + (P_c*sigma_o/P_o^2)^2.
inline double retention_stderr(const TaskScore& s) {
    if (s.original <= 0.0)
        throw validation_error("retention stderr undefined: original score is zero");
    double a = s.compressed_stderr / s.original;
    double b = s.compressed * s.original_stderr / (s.original * s.original);
    return std::sqrt(a * a + b * b);
}

// Mean of per-task retention ratios.
inline double semantic_retention_sr1(const std::vector<TaskScore>& scores) {
    if (scores.empty()) throw validation_error("semantic retention over empty task set");
    double sum = 0.0;
    for (const TaskScore& s : scores) sum += retention_rate(s);
    return sum / static_cast<double>(scores.size());
}

// Ratio of score sums; weights tasks by original performance. This is the
// default aggregation throughout the toolkit.
inline double semantic_retention_sr2(const std::vector<TaskScore>& scores) {
    if (scores.empty()) throw validation_error("semantic retention over empty task set");
    double num = 0.0, den = 0.0;
    for (const TaskScore& s : scores) {
        num += s.compressed;
        den += s.original;
    }
    if (den <= 0.0) throw validation_error("semantic retention undefined: zero original sum");
    return num / den;
}

// Retention weighted by how aggressive the compression is. The weight is
// sqrt(p) for pruning, -log2(q/16)/4 for quantization (1 at the 1-bit
// reference point), and their product for joint configs.
struct SrcrBreakdown {
    CompressionConfig config;
    double sr = 0.0;
    double compression_factor = 0.0;
    double srcr = 0.0;
};

inline double pruning_weight(const Rational& sparsity) {
    if (sparsity < Rational(0) || sparsity > Rational(1))
        throw validation_error("sparsity outside [0,1]: " + sparsity.to_string());
    return std::sqrt(sparsity.to_double());
}

inline double quantization_weight(const Rational& bits) {
    if (bits <= Rational(0) || bits > Rational(16))
        throw validation_error("bits outside (0,16]: " + bits.to_string());
    return -std::log2(bits.to_double() / 16.0) / 4.0;
}

inline SrcrBreakdown srcr_pruning(const Rational& sparsity, double sr) {
    if (sr < 0.0) throw validation_error("negative retention");
    SrcrBreakdown b;
    b.config = CompressionConfig::pruning_only(sparsity);
    b.sr = sr;
    b.compression_factor = pruning_weight(sparsity);
    b.srcr = b.compression_factor * sr;
    return b;
}

inline SrcrBreakdown srcr_quantization(const Rational& bits, double sr) {
    if (sr < 0.0) throw validation_error("negative retention");
    SrcrBreakdown b;
    b.config = CompressionConfig::quantization_only(bits);
    b.sr = sr;
    b.compression_factor = quantization_weight(bits);
    b.srcr = b.compression_factor * sr;
    return b;
}

// Zero when either method is absent: a config with no pruning or no
// quantization is not a joint configuration.
inline SrcrBreakdown srcr_joint(const CompressionConfig& config, double sr) {
    config.validate();
    if (sr < 0.0) throw validation_error("negative retention");
    SrcrBreakdown b;
    b.config = config;
    b.sr = sr;
    if (!config.is_joint()) {
        b.compression_factor = 0.0;
        b.srcr = 0.0;
        return b;
    }
    b.compression_factor = quantization_weight(config.bits) * pruning_weight(config.sparsity);
    b.srcr = b.compression_factor * sr;
    return b;
}

// Product of single-method breakdowns from the same model, predicting the
// joint value.
inline double srcr_estimate(const SrcrBreakdown& pruning, const SrcrBreakdown& quantization) {
    return pruning.srcr * quantization.srcr;
}

// Scores every joint config and returns the full ranking, best first. Ties
// go to the higher compression rate, then to fewer bits.
inline std::vector<SrcrBreakdown> optimal_config_search(
    const std::vector<std::pair<CompressionConfig, double>>& records) {
    if (records.empty()) throw validation_error("config search over empty record set");
    std::vector<SrcrBreakdown> ranking;
    for (const auto& [config, sr] : records) {
        if (!config.is_joint()) continue;
        ranking.push_back(srcr_joint(config, sr));
    }
    std::stable_sort(ranking.begin(), ranking.end(),
                     [](const SrcrBreakdown& a, const SrcrBreakdown& b) {
                         if (a.srcr != b.srcr) return a.srcr > b.srcr;
                         Rational ta = theoretical_compression_rate(a.config);
                         Rational tb = theoretical_compression_rate(b.config);
                         if (ta != tb) return tb < ta;
                         return a.config.bits < b.config.bits;
                     });
    return ranking;
}

} // namespace srcr
