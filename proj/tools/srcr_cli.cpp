// srcr: joint-compression analysis toolkit.
//
// Subcommands cover the three layers of the toolkit: rate metrics (tcr,
// srcr, retention, search, report), compression kernels on matrix files
// (prune, quantize, joint), and the seeded synthetic-layer experiments
// (validate-errors). Machine output goes to stdout, logs and the run
// manifest to stderr. Exit codes: 0 ok, 1 usage, 2 data/validation,
// 3 numerical failure.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "srcr/errorlab.hpp"
#include "srcr/mask.hpp"
#include "srcr/matrix_io.hpp"
#include "srcr/metrics.hpp"
#include "srcr/pruning.hpp"
#include "srcr/quantization.hpp"
#include "srcr/results_io.hpp"
#include "srcr/sha256.hpp"
#include "srcr/synth.hpp"

namespace {

using nlohmann::json;
using namespace srcr;

struct RunManifest {
    std::string subcommand;
    json parameters = json::object();
    json input_digests = json::object();
    json output_paths = json::array();
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::optional<std::string> manifest_path;

    void add_input(const std::filesystem::path& p) {
        try {
            if (std::filesystem::is_directory(p)) {
                for (const auto& e : std::filesystem::directory_iterator(p))
                    if (e.is_regular_file())
                        input_digests[e.path().string()] = Sha256::of(read_file(e.path()));
            } else {
                input_digests[p.string()] = Sha256::of(read_file(p));
            }
        } catch (const std::exception&) {
            // digests are best-effort bookkeeping; loading reports real errors
        }
    }

    void add_output(const std::filesystem::path& p) {
        json entry{{"path", p.string()}};
        try {
            entry["sha256"] = Sha256::of(read_file(p));
        } catch (const std::exception&) {
        }
        output_paths.push_back(entry);
    }

    void emit() {
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
        json m{{"tool", "srcr"},          {"version", kToolVersion},
               {"subcommand", subcommand}, {"parameters", parameters},
               {"inputs", input_digests},  {"outputs", output_paths},
               {"wall_clock_ms", elapsed}};
        std::cerr << m.dump() << "\n";
        if (manifest_path) write_file_atomic(*manifest_path, m.dump(2) + "\n");
    }
};

std::string default_scores_path() {
    if (const char* env = std::getenv("SRCR_FIXTURES")) return env;
    return "fixtures/paper_tables";
}

CompressionConfig config_from_flags(const std::string& sparsity, const std::string& bits,
                                    const std::string& pattern) {
    Rational s = Rational::parse_snapped(sparsity);
    std::string pat = pattern;
    if ((pat.empty() || pat == "none") && s > Rational(0)) pat = "unstructured";
    return CompressionConfig::from_fields(s, Rational::parse(bits), pat);
}

DenseMatrix load_calibration(const std::string& calib_path, bool identity, std::size_t in_dim) {
    if (identity) return DenseMatrix::identity(in_dim);
    if (calib_path.empty())
        throw validation_error("either --calib FILE or --identity-calib is required");
    DenseMatrix x = load_matrix(calib_path);
    if (x.rows() != in_dim)
        throw validation_error("calibration has " + std::to_string(x.rows()) +
                               " features but weights have " + std::to_string(in_dim) +
                               " input columns");
    return x;
}

json prune_report_json(const PruneReport& r) {
    return json{{"achieved_sparsity", r.achieved_sparsity},
                {"layer_objective_delta", r.layer_objective_delta},
                {"rows", r.mask.rows},
                {"cols", r.mask.cols},
                {"kept", r.mask.count_ones()}};
}

json sidecar_json(const QuantizedLayer& q) {
    json j{{"scheme", to_string(q.grid.scheme)},
           {"bits", q.grid.bits},
           {"group_size", q.grid.group_size},
           {"per_column_error", q.per_column_error},
           {"delta_sq_norms", q.delta_sq_norms}};
    if (q.grid.scheme == QuantScheme::nf4) j["block_size"] = q.grid.block_size;
    if (q.grid.outlier_threshold) j["outlier_threshold"] = *q.grid.outlier_threshold;
    return j;
}

// ---- tcr ------------------------------------------------------------------

struct TcrArgs {
    std::string sparsity = "0";
    std::string bits = "16";
    std::string pattern = "none";
    bool table = false;
    std::vector<std::string> sparsities;
    std::vector<std::string> bit_widths;
    std::string format = "text";
};

int run_tcr(const TcrArgs& a, RunManifest& manifest) {
    if (a.table) {
        std::vector<Rational> sparsities, bits;
        if (a.sparsities.empty())
            sparsities = default_table_sparsities();
        else
            for (const auto& s : a.sparsities) sparsities.push_back(Rational::parse_snapped(s));
        if (a.bit_widths.empty())
            bits = default_table_bits();
        else
            for (const auto& b : a.bit_widths) bits.push_back(Rational::parse(b));
        TcrTable t = tcr_table(sparsities, bits);

        if (a.format == "json") {
            json cells = json::array();
            for (std::size_t r = 0; r < t.bit_widths.size(); ++r)
                for (std::size_t c = 0; c < t.sparsities.size(); ++c)
                    cells.push_back(json{{"bits", t.bit_widths[r].to_string()},
                                         {"sparsity", t.sparsities[c].to_string()},
                                         {"tcr", t.cells[r][c].to_string()},
                                         {"percent", t.cells[r][c].to_percent_string()}});
            std::cout << json{{"cells", cells}}.dump(2) << "\n";
        } else if (a.format == "csv") {
            std::cout << "bits";
            for (const auto& s : t.sparsities) std::cout << "," << s.to_percent_string();
            std::cout << "\n";
            for (std::size_t r = 0; r < t.bit_widths.size(); ++r) {
                std::cout << t.bit_widths[r].to_string();
                for (const auto& cell : t.cells[r]) std::cout << "," << cell.to_percent_string();
                std::cout << "\n";
            }
        } else {
            std::cout << "| bits \\ sparsity |";
            for (const auto& s : t.sparsities) std::cout << " " << s.to_percent_string() << " |";
            std::cout << "\n|";
            for (std::size_t c = 0; c <= t.sparsities.size(); ++c) std::cout << " --- |";
            std::cout << "\n";
            for (std::size_t r = 0; r < t.bit_widths.size(); ++r) {
                std::cout << "| " << t.bit_widths[r].to_string() << " bit |";
                for (const auto& cell : t.cells[r])
                    std::cout << " " << cell.to_percent_string() << " |";
                std::cout << "\n";
            }
        }
        manifest.parameters["table"] = true;
        return 0;
    }

    CompressionConfig c = config_from_flags(a.sparsity, a.bits, a.pattern);
    Rational rate = theoretical_compression_rate(c);
    if (a.format == "json") {
        std::cout << json{{"config", c.to_string()},
                          {"tcr", rate.to_string()},
                          {"percent", rate.to_percent_string()}}
                         .dump()
                  << "\n";
    } else {
        std::cout << rate.to_percent_string() << "\n";
    }
    return 0;
}

// ---- prune ----------------------------------------------------------------

struct PruneArgs {
    std::string weights;
    std::string calib;
    bool identity_calib = false;
    std::string sparsity = "1/2";
    std::string pattern = "unstructured";
    std::size_t block_size = 128;
    double dampening = 0.01;
    std::string out_weights;
    std::string out_mask;
    std::string format = "json";
};

int run_prune(const PruneArgs& a, RunManifest& manifest) {
    DenseMatrix w = load_matrix(a.weights);
    manifest.add_input(a.weights);
    DenseMatrix x = load_calibration(a.calib, a.identity_calib, w.cols());
    if (!a.calib.empty()) manifest.add_input(a.calib);

    CompressionConfig cfg = config_from_flags(a.sparsity, "16", a.pattern);
    PruneReport r = sparsegpt_prune(w, x, cfg, a.block_size, a.dampening);

    if (!a.out_weights.empty()) {
        save_matrix(r.pruned_weights, a.out_weights);
        manifest.add_output(a.out_weights);
    }
    if (!a.out_mask.empty()) {
        save_matrix(r.mask.to_matrix(), a.out_mask);
        manifest.add_output(a.out_mask);
    }

    json out = prune_report_json(r);
    out["config"] = cfg.to_string();
    if (a.format == "json")
        std::cout << out.dump(2) << "\n";
    else
        std::cout << "pruned " << (r.mask.bits.size() - r.mask.count_ones()) << "/"
                  << r.mask.bits.size() << " weights (sparsity " << r.achieved_sparsity
                  << "), objective delta " << r.layer_objective_delta << "\n";
    return 0;
}

// ---- quantize / joint -------------------------------------------------------

struct QuantArgs {
    std::string weights;
    std::string calib;
    bool identity_calib = false;
    std::string scheme = "gptq"; // rtn | nf4 | int8 | gptq
    int bits = 4;
    std::size_t group_size = 128;
    std::size_t block_size = 128;
    std::size_t nf4_block_size = 64;
    double dampening = 0.01;
    std::optional<double> outlier_threshold;
    std::string mask_path;
    std::string case_mode = "A";
    std::string out;
    std::string format = "json";
};

QuantizedLayer run_quantizer(const QuantArgs& a, const DenseMatrix& w, const DenseMatrix* x,
                             const SparsityMask* mask) {
    if (a.scheme == "rtn") return rtn_quantize(w, a.bits, a.group_size);
    if (a.scheme == "nf4") return nf4_quantize(w, a.nf4_block_size);
    if (a.scheme == "int8") return int8_absmax_quantize(w, a.outlier_threshold);
    if (a.scheme == "gptq") {
        if (!x) throw validation_error("gptq needs calibration inputs");
        GptqMaskMode mode =
            a.case_mode == "B" ? GptqMaskMode::masked_case_b : GptqMaskMode::full_case_a;
        return gptq_quantize(w, *x, a.bits, a.group_size, a.block_size, a.dampening, mask, mode);
    }
    throw validation_error("unknown scheme '" + a.scheme + "'");
}

int run_quantize(const QuantArgs& a, RunManifest& manifest) {
    DenseMatrix w = load_matrix(a.weights);
    manifest.add_input(a.weights);

    std::optional<DenseMatrix> x;
    if (a.scheme == "gptq") {
        x = load_calibration(a.calib, a.identity_calib, w.cols());
        if (!a.calib.empty()) manifest.add_input(a.calib);
    }
    std::optional<SparsityMask> mask;
    if (!a.mask_path.empty()) {
        mask = SparsityMask::from_matrix(load_matrix(a.mask_path));
        manifest.add_input(a.mask_path);
    }
    if (a.case_mode == "B" && !mask) throw validation_error("--case B requires --mask");

    QuantizedLayer q = run_quantizer(a, w, x ? &*x : nullptr, mask ? &*mask : nullptr);

    if (!a.out.empty()) {
        save_matrix(q.dequantized, a.out);
        manifest.add_output(a.out);
        std::string sidecar = a.out + ".json";
        write_file_atomic(sidecar, sidecar_json(q).dump(2) + "\n");
        manifest.add_output(sidecar);
    }

    double total_err = 0.0, total_delta = 0.0;
    for (double v : q.per_column_error) total_err += v;
    for (double v : q.delta_sq_norms) total_delta += v;
    json out{{"scheme", a.scheme},
             {"total_error", total_err},
             {"total_delta_sq", total_delta}};
    if (x) out["layer_objective"] = layer_objective(w, q.dequantized, *x);
    if (a.format == "json")
        std::cout << out.dump(2) << "\n";
    else
        std::cout << a.scheme << " total error " << total_err << "\n";
    return 0;
}

struct JointArgs {
    PruneArgs prune;
    QuantArgs quant;
    std::string out_quantized;
};

int run_joint(JointArgs& a, RunManifest& manifest) {
    DenseMatrix w = load_matrix(a.prune.weights);
    manifest.add_input(a.prune.weights);
    DenseMatrix x = load_calibration(a.prune.calib, a.prune.identity_calib, w.cols());
    if (!a.prune.calib.empty()) manifest.add_input(a.prune.calib);

    CompressionConfig prune_cfg = config_from_flags(a.prune.sparsity, "16", a.prune.pattern);
    PruneReport pr = sparsegpt_prune(w, x, prune_cfg, a.prune.block_size, a.prune.dampening);

    GptqMaskMode mode =
        a.quant.case_mode == "B" ? GptqMaskMode::masked_case_b : GptqMaskMode::full_case_a;
    QuantizedLayer q = gptq_quantize(pr.pruned_weights, x, a.quant.bits, a.quant.group_size,
                                     a.quant.block_size, a.prune.dampening, &pr.mask, mode);

    if (!a.prune.out_weights.empty()) {
        save_matrix(pr.pruned_weights, a.prune.out_weights);
        manifest.add_output(a.prune.out_weights);
    }
    if (!a.prune.out_mask.empty()) {
        save_matrix(pr.mask.to_matrix(), a.prune.out_mask);
        manifest.add_output(a.prune.out_mask);
    }
    if (!a.out_quantized.empty()) {
        save_matrix(q.dequantized, a.out_quantized);
        manifest.add_output(a.out_quantized);
        std::string sidecar = a.out_quantized + ".json";
        write_file_atomic(sidecar, sidecar_json(q).dump(2) + "\n");
        manifest.add_output(sidecar);
    }

    CompressionConfig joint_cfg =
        CompressionConfig::joint(prune_cfg.sparsity, Rational(a.quant.bits), prune_cfg.nm);
    double total_err = 0.0, total_delta = 0.0;
    for (double v : q.per_column_error) total_err += v;
    for (double v : q.delta_sq_norms) total_delta += v;
    json out{{"config", joint_cfg.to_string()},
             {"case", a.quant.case_mode},
             {"tcr", theoretical_compression_rate(joint_cfg).to_percent_string()},
             {"prune", prune_report_json(pr)},
             {"quantize",
              {{"total_error", total_err},
               {"total_delta_sq", total_delta},
               {"layer_objective", layer_objective(pr.pruned_weights, q.dequantized, x)}}}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

// ---- validate-errors ---------------------------------------------------------

struct ValidateArgs {
    std::string experiment = "case-ab"; // case-ab | delta
    std::uint64_t seed = 1;
    unsigned num_seeds = 1;
    std::size_t rows = 64, cols = 64, samples = 1024;
    double rho = 0.9;
    std::string weight_dist = "gaussian";
    double sigma = 1.0, lo = -1.0, hi = 1.0;
    std::vector<std::string> sparsities;
    std::vector<int> bits;
    std::size_t group_size = 128, block_size = 128;
    double dampening = 0.01;
    bool identity_calib = false;
    unsigned jobs = 1;
    std::string out;
    std::string format = "json";
};

SyntheticLayerSpec spec_from_args(const ValidateArgs& a, std::uint64_t seed) {
    SyntheticLayerSpec spec;
    spec.seed = seed;
    spec.out_dim = a.rows;
    spec.in_dim = a.cols;
    spec.n_samples = a.samples;
    spec.calib_correlation = a.rho;
    spec.weight_dist = a.weight_dist == "uniform" ? WeightDist::uniform(a.lo, a.hi)
                                                  : WeightDist::gaussian(a.sigma);
    return spec;
}

int run_validate_errors(const ValidateArgs& a, RunManifest& manifest) {
    ExperimentOptions opts;
    opts.group_size = a.group_size;
    opts.block_size = a.block_size;
    opts.dampening = a.dampening;
    opts.identity_calibration = a.identity_calib;

    std::vector<std::uint64_t> seeds;
    for (unsigned i = 0; i < a.num_seeds; ++i) seeds.push_back(a.seed + i);

    std::vector<json> records(seeds.size());
    std::vector<std::vector<std::string>> csv_rows(seeds.size());

    auto run_one = [&](std::size_t idx) {
        SyntheticLayerSpec spec = spec_from_args(a, seeds[idx]);
        if (a.experiment == "delta") {
            std::vector<Rational> sp;
            for (const auto& s : a.sparsities) sp.push_back(Rational::parse_snapped(s));
            auto rows = delta_estimation_experiment(spec, sp, a.bits, opts);
            json arr = json::array();
            for (const auto& r : rows) {
                arr.push_back(to_json(r));
                csv_rows[idx].push_back(to_csv_row(r));
            }
            records[idx] = std::move(arr);
        } else if (a.experiment == "case-ab") {
            Rational sparsity =
                a.sparsities.empty() ? Rational(1, 4) : Rational::parse_snapped(a.sparsities[0]);
            int bits = a.bits.empty() ? 4 : a.bits[0];
            CaseAbResult r = case_ab_experiment(spec, sparsity, bits, opts);
            records[idx] = json::array({to_json(r)});
            csv_rows[idx].push_back(to_csv_row(r));
        } else {
            throw validation_error("unknown experiment '" + a.experiment + "'");
        }
    };

    if (a.jobs <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            std::cerr << "seed " << seeds[i] << "...\n";
            run_one(i);
        }
    } else {
        // seeds fan out over a small pool; results land in per-index slots so
        // aggregation order never depends on scheduling
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mu;
        std::vector<std::thread> pool;
        unsigned n = std::min<unsigned>(a.jobs, static_cast<unsigned>(seeds.size()));
        for (unsigned t = 0; t < n; ++t)
            pool.emplace_back([&] {
                try {
                    for (std::size_t i = next.fetch_add(1); i < seeds.size();
                         i = next.fetch_add(1))
                        run_one(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mu);
                    if (!failure) failure = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    json flat = json::array();
    for (const auto& rec : records)
        for (const auto& item : rec) flat.push_back(item);

    std::string payload;
    if (a.format == "csv") {
        payload = experiment_csv_header() + "\n";
        for (const auto& rows : csv_rows)
            for (const auto& row : rows) payload += row + "\n";
    } else {
        payload = flat.dump(2) + "\n";
    }

    if (!a.out.empty()) {
        write_file_atomic(a.out, payload);
        manifest.add_output(a.out);
    } else {
        std::cout << payload;
    }
    return 0;
}

// ---- retention / srcr / search / report --------------------------------------

struct ScoresArgs {
    std::string scores = default_scores_path();
    std::string model;
    std::string format = "md";
};

int run_retention(const ScoresArgs& a, RunManifest& manifest) {
    ScoreDataset ds = load_scores(a.scores);
    manifest.add_input(a.scores);
    RetentionReport report = retention_report(ds, a.model);
    if (a.format == "json")
        std::cout << to_json(report).dump(2) << "\n";
    else if (a.format == "csv")
        std::cout << emit_table(report, TableFormat::csv);
    else
        std::cout << emit_table(report, TableFormat::markdown);
    return 0;
}

struct SrcrArgs {
    std::string sparsity = "0";
    std::string bits = "16";
    std::string pattern;
    double sr = 1.0;
    std::optional<double> sr_p, sr_q;
    std::string format = "json";
};

int run_srcr(const SrcrArgs& a, RunManifest&) {
    Rational sparsity = Rational::parse_snapped(a.sparsity);
    Rational bits = Rational::parse(a.bits);
    std::string pattern = a.pattern;
    if (pattern.empty()) pattern = sparsity == Rational(0) ? "none" : "unstructured";
    CompressionConfig cfg = CompressionConfig::from_fields(sparsity, bits, pattern);

    SrcrBreakdown b;
    std::string kind;
    if (cfg.is_joint()) {
        b = srcr_joint(cfg, a.sr);
        kind = "joint";
    } else if (cfg.has_pruning()) {
        b = srcr_pruning(cfg.sparsity, a.sr);
        kind = "pruning";
    } else if (cfg.has_quantization()) {
        b = srcr_quantization(cfg.bits, a.sr);
        kind = "quantization";
    } else {
        b = SrcrBreakdown{cfg, a.sr, 0.0, 0.0};
        kind = "baseline";
    }

    json out = to_json(b);
    out["kind"] = kind;
    if (a.sr_p && a.sr_q) {
        SrcrBreakdown bp = srcr_pruning(cfg.sparsity, *a.sr_p);
        SrcrBreakdown bq = srcr_quantization(cfg.bits, *a.sr_q);
        out["estimate_from_single_runs"] = srcr_estimate(bp, bq);
    }
    if (a.format == "json")
        std::cout << out.dump(2) << "\n";
    else
        std::cout << "srcr(" << cfg.to_string() << ", sr=" << a.sr << ") = " << b.srcr << "\n";
    return 0;
}

int run_search(const ScoresArgs& a, RunManifest& manifest) {
    ScoreDataset ds = load_scores(a.scores);
    manifest.add_input(a.scores);
    auto ranking = search_dataset(ds, a.model);
    if (a.format == "json") {
        json arr = json::array();
        for (const auto& b : ranking) arr.push_back(to_json(b));
        std::cout << arr.dump(2) << "\n";
    } else if (a.format == "csv") {
        std::cout << "rank,config,tcr,sr,compression_factor,srcr\n";
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            const auto& b = ranking[i];
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%zu,%s,%s,%.4f,%.4f,%.4f\n", i + 1,
                          b.config.to_string().c_str(),
                          theoretical_compression_rate(b.config).to_percent_string().c_str(),
                          b.sr, b.compression_factor, b.srcr);
            std::cout << buf;
        }
    } else {
        std::cout << "| rank | config | tcr | sr | srcr |\n| --- | --- | --- | --- | --- |\n";
        for (std::size_t i = 0; i < ranking.size(); ++i) {
            const auto& b = ranking[i];
            char buf[160];
            std::snprintf(buf, sizeof(buf), "| %zu | %s | %s | %.4f | %.4f |\n", i + 1,
                          b.config.to_string().c_str(),
                          theoretical_compression_rate(b.config).to_percent_string().c_str(),
                          b.sr, b.srcr);
            std::cout << buf;
        }
    }
    return 0;
}

struct ReportArgs {
    ScoresArgs scores;
    std::string figure; // empty: table
    std::string out;
};

int run_report(const ReportArgs& a, RunManifest& manifest) {
    ScoreDataset ds = load_scores(a.scores.scores);
    manifest.add_input(a.scores.scores);
    RetentionReport report = retention_report(ds, a.scores.model);

    if (a.figure.empty()) {
        std::string text = a.scores.format == "json"
                               ? to_json(report).dump(2) + "\n"
                               : emit_table(report, a.scores.format == "csv"
                                                        ? TableFormat::csv
                                                        : TableFormat::markdown);
        if (!a.out.empty()) {
            write_file_atomic(a.out, text);
            manifest.add_output(a.out);
        } else {
            std::cout << text;
        }
        return 0;
    }

    FigureKind kind;
    if (a.figure == "retention_bars")
        kind = FigureKind::retention_bars;
    else if (a.figure == "srcr_bars")
        kind = FigureKind::srcr_bars;
    else if (a.figure == "joint_vs_quant")
        kind = FigureKind::joint_vs_quant;
    else
        throw validation_error("unknown figure kind '" + a.figure + "'");

    PlotBundle bundle = emit_plot_data(report, kind);
    if (a.out.empty()) throw validation_error("--figure requires --out PATH");
    write_file_atomic(a.out + ".csv", bundle.csv);
    manifest.add_output(a.out + ".csv");
    write_file_atomic(a.out + ".svg", bundle.svg);
    manifest.add_output(a.out + ".svg");
    std::cerr << "wrote " << a.out << ".csv and " << a.out << ".svg\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"srcr: joint pruning/quantization compression analysis"};
    app.require_subcommand(1);
    app.set_config("--config");
    std::string manifest_path;
    app.add_option("--manifest", manifest_path, "also write the run manifest to this path");

    TcrArgs tcr;
    auto* cmd_tcr = app.add_subcommand("tcr", "theoretical compression rate");
    cmd_tcr->add_option("--sparsity", tcr.sparsity, "sparsity (1/4, 0.25 or 25%)");
    cmd_tcr->add_option("--bits", tcr.bits, "quantization bit-width");
    cmd_tcr->add_option("--pattern", tcr.pattern, "none|unstructured|N:M");
    cmd_tcr->add_flag("--table", tcr.table, "print the full rate grid");
    cmd_tcr->add_option("--sparsities", tcr.sparsities, "table columns")->delimiter(',');
    cmd_tcr->add_option("--bit-widths", tcr.bit_widths, "table rows")->delimiter(',');
    cmd_tcr->add_option("--format", tcr.format, "text|md|csv|json");

    PruneArgs prune;
    auto* cmd_prune = app.add_subcommand("prune", "one-shot compensated pruning");
    cmd_prune->add_option("--weights", prune.weights, "weight matrix file")->required();
    cmd_prune->add_option("--calib", prune.calib, "calibration matrix file");
    cmd_prune->add_flag("--identity-calib", prune.identity_calib, "use identity calibration");
    cmd_prune->add_option("--sparsity", prune.sparsity, "target sparsity");
    cmd_prune->add_option("--pattern", prune.pattern, "unstructured|N:M");
    cmd_prune->add_option("--block-size", prune.block_size, "column block size");
    cmd_prune->add_option("--dampening", prune.dampening, "Hessian dampening fraction");
    cmd_prune->add_option("--out-weights", prune.out_weights, "write pruned weights here");
    cmd_prune->add_option("--out-mask", prune.out_mask, "write the mask here");
    cmd_prune->add_option("--format", prune.format, "json|text");

    QuantArgs quant;
    auto* cmd_quant = app.add_subcommand("quantize", "quantize a weight matrix");
    cmd_quant->add_option("--weights", quant.weights, "weight matrix file")->required();
    cmd_quant->add_option("--calib", quant.calib, "calibration matrix file (gptq)");
    cmd_quant->add_flag("--identity-calib", quant.identity_calib, "use identity calibration");
    cmd_quant->add_option("--scheme", quant.scheme, "rtn|nf4|int8|gptq");
    cmd_quant->add_option("--bits", quant.bits, "bit-width (rtn/gptq)");
    cmd_quant->add_option("--group-size", quant.group_size, "uniform grid group size");
    cmd_quant->add_option("--block-size", quant.block_size, "gptq column block size");
    cmd_quant->add_option("--nf4-block-size", quant.nf4_block_size, "nf4 block size");
    cmd_quant->add_option("--dampening", quant.dampening, "Hessian dampening fraction");
    cmd_quant->add_option("--outlier-threshold", quant.outlier_threshold,
                          "int8 column passthrough threshold (conventionally 6.0)");
    cmd_quant->add_option("--mask", quant.mask_path, "sparsity mask file");
    cmd_quant->add_option("--case", quant.case_mode, "A (full) or B (masked)");
    cmd_quant->add_option("--out", quant.out, "write dequantized weights (+ .json sidecar)");
    cmd_quant->add_option("--format", quant.format, "json|text");

    JointArgs joint;
    auto* cmd_joint = app.add_subcommand("joint", "prune then quantize sequentially");
    cmd_joint->add_option("--weights", joint.prune.weights, "weight matrix file")->required();
    cmd_joint->add_option("--calib", joint.prune.calib, "calibration matrix file");
    cmd_joint->add_flag("--identity-calib", joint.prune.identity_calib,
                        "use identity calibration");
    cmd_joint->add_option("--sparsity", joint.prune.sparsity, "target sparsity");
    cmd_joint->add_option("--pattern", joint.prune.pattern, "unstructured|N:M");
    cmd_joint->add_option("--bits", joint.quant.bits, "quantization bit-width");
    cmd_joint->add_option("--case", joint.quant.case_mode, "A (full) or B (masked)");
    cmd_joint->add_option("--group-size", joint.quant.group_size, "uniform grid group size");
    cmd_joint->add_option("--block-size", joint.prune.block_size, "column block size");
    cmd_joint->add_option("--dampening", joint.prune.dampening, "Hessian dampening fraction");
    cmd_joint->add_option("--out-weights", joint.prune.out_weights, "write pruned weights");
    cmd_joint->add_option("--out-mask", joint.prune.out_mask, "write the mask");
    cmd_joint->add_option("--out-quantized", joint.out_quantized,
                          "write quantized weights (+ sidecar)");

    ValidateArgs val;
    auto* cmd_val = app.add_subcommand("validate-errors", "sequential-error experiments");
    cmd_val->add_option("--experiment", val.experiment, "case-ab|delta");
    cmd_val->add_option("--seed", val.seed, "first seed");
    cmd_val->add_option("--num-seeds", val.num_seeds, "number of consecutive seeds");
    cmd_val->add_option("--rows", val.rows, "layer output dimension");
    cmd_val->add_option("--cols", val.cols, "layer input dimension");
    cmd_val->add_option("--samples", val.samples, "calibration sample count");
    cmd_val->add_option("--rho", val.rho, "calibration feature correlation");
    cmd_val->add_option("--weight-dist", val.weight_dist, "gaussian|uniform");
    cmd_val->add_option("--sigma", val.sigma, "gaussian weight sigma");
    cmd_val->add_option("--lo", val.lo, "uniform weight low");
    cmd_val->add_option("--hi", val.hi, "uniform weight high");
    cmd_val->add_option("--sparsity", val.sparsities, "sparsity level(s)")->delimiter(',');
    cmd_val->add_option("--bits", val.bits, "bit-width level(s)")->delimiter(',');
    cmd_val->add_option("--group-size", val.group_size, "uniform grid group size");
    cmd_val->add_option("--block-size", val.block_size, "column block size");
    cmd_val->add_option("--dampening", val.dampening, "Hessian dampening fraction");
    cmd_val->add_flag("--identity-calib", val.identity_calib, "use identity calibration");
    cmd_val->add_option("--jobs", val.jobs, "run seeds concurrently");
    cmd_val->add_option("--out", val.out, "write results here instead of stdout");
    cmd_val->add_option("--format", val.format, "json|csv");

    ScoresArgs retention;
    auto* cmd_ret = app.add_subcommand("retention", "retention report from score tables");
    cmd_ret->add_option("--scores", retention.scores, "score file or directory");
    cmd_ret->add_option("--model", retention.model, "model identifier")->required();
    cmd_ret->add_option("--format", retention.format, "md|csv|json");

    SrcrArgs srcr_args;
    auto* cmd_srcr = app.add_subcommand("srcr", "retention-compression breakdown");
    cmd_srcr->add_option("--sparsity", srcr_args.sparsity, "sparsity");
    cmd_srcr->add_option("--bits", srcr_args.bits, "bit-width");
    cmd_srcr->add_option("--pattern", srcr_args.pattern, "none|unstructured|N:M");
    cmd_srcr->add_option("--sr", srcr_args.sr, "semantic retention value")->required();
    cmd_srcr->add_option("--sr-p", srcr_args.sr_p, "pruning-only Sr for the estimate");
    cmd_srcr->add_option("--sr-q", srcr_args.sr_q, "quantization-only Sr for the estimate");
    cmd_srcr->add_option("--format", srcr_args.format, "json|text");

    ScoresArgs search;
    auto* cmd_search = app.add_subcommand("search", "rank joint configs by srcr");
    cmd_search->add_option("--scores", search.scores, "score file or directory");
    cmd_search->add_option("--model", search.model, "model identifier")->required();
    cmd_search->add_option("--format", search.format, "md|csv|json");

    ReportArgs report;
    auto* cmd_report = app.add_subcommand("report", "tables and plot data");
    cmd_report->add_option("--scores", report.scores.scores, "score file or directory");
    cmd_report->add_option("--model", report.scores.model, "model identifier")->required();
    cmd_report->add_option("--figure", report.figure,
                           "retention_bars|srcr_bars|joint_vs_quant (omit for the table)");
    cmd_report->add_option("--out", report.out, "output path (figure: writes .csv and .svg)");
    cmd_report->add_option("--format", report.scores.format, "md|csv|json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help and friends
        app.exit(e);
        return 1;
    }

    RunManifest manifest;
    if (!manifest_path.empty()) manifest.manifest_path = manifest_path;

    try {
        int rc = 1;
        if (cmd_tcr->parsed()) {
            manifest.subcommand = "tcr";
            rc = run_tcr(tcr, manifest);
        } else if (cmd_prune->parsed()) {
            manifest.subcommand = "prune";
            rc = run_prune(prune, manifest);
        } else if (cmd_quant->parsed()) {
            manifest.subcommand = "quantize";
            rc = run_quantize(quant, manifest);
        } else if (cmd_joint->parsed()) {
            manifest.subcommand = "joint";
            rc = run_joint(joint, manifest);
        } else if (cmd_val->parsed()) {
            manifest.subcommand = "validate-errors";
            rc = run_validate_errors(val, manifest);
        } else if (cmd_ret->parsed()) {
            manifest.subcommand = "retention";
            rc = run_retention(retention, manifest);
        } else if (cmd_srcr->parsed()) {
            manifest.subcommand = "srcr";
            rc = run_srcr(srcr_args, manifest);
        } else if (cmd_search->parsed()) {
            manifest.subcommand = "search";
            rc = run_search(search, manifest);
        } else if (cmd_report->parsed()) {
            manifest.subcommand = "report";
            rc = run_report(report, manifest);
        }
        manifest.emit();
        return rc;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
