#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "srcr/matrix_io.hpp" // read_file / write_file_atomic
#include "srcr/metrics.hpp"

#include "json.hpp"

namespace srcr {

// One benchmark measurement: a model under a compression config scored on a
// task. "mean" rows hold the published cross-task average.
struct ScoreRecord {
    std::string model;
    CompressionConfig config;
    std::string task; // mmlu_pro | bbh | math | mean | other
    double score = 0.0;
    double stderr_value = 0.0;
};

inline constexpr const char* kScoreCsvHeader = "model,sparsity,bits,pattern,task,score,stderr";

struct ScoreDataset {
    std::vector<ScoreRecord> records;

    std::vector<std::string> models() const {
        std::set<std::string> seen;
        for (const auto& r : records) seen.insert(r.model);
        return {seen.begin(), seen.end()};
    }

    const ScoreRecord* find(const std::string& model, const CompressionConfig& config,
                            const std::string& task) const {
        for (const auto& r : records)
            if (r.model == model && r.config == config && r.task == task) return &r;
        return nullptr;
    }

    std::vector<CompressionConfig> configs_for(const std::string& model) const {
        std::set<CompressionConfig> seen;
        for (const auto& r : records)
            if (r.model == model) seen.insert(r.config);
        return {seen.begin(), seen.end()};
    }
};

namespace detail {

struct RecordKey {
    std::string model;
    CompressionConfig config;
    std::string task;
    friend bool operator<(const RecordKey& a, const RecordKey& b) {
        return std::tie(a.model, a.config, a.task) < std::tie(b.model, b.config, b.task);
    }
};

inline void validate_record(const ScoreRecord& r, const std::string& where) {
    if (r.model.empty()) throw validation_error(where + ": empty model identifier");
    if (r.task.empty()) throw validation_error(where + ": empty task identifier");
    if (!(r.score >= 0.0 && r.score <= 100.0))
        throw validation_error(where + ": score " + std::to_string(r.score) +
                               " outside [0,100] for (" + r.model + ", " + r.config.to_string() +
                               ", " + r.task + ")");
    if (r.stderr_value < 0.0) throw validation_error(where + ": negative stderr");
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline Rational bits_from_json(const nlohmann::json& v, const std::string& where) {
    if (v.is_string()) return Rational::parse(v.get<std::string>());
    if (v.is_number_integer()) return Rational(v.get<long long>());
    if (v.is_number()) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.10g", v.get<double>());
        return Rational::parse(buf);
    }
    throw validation_error(where + ": bits must be a number or rational string");
}

} // namespace detail

// Parses the canonical score CSV (header model,sparsity,bits,pattern,task,
// score,stderr). Rejects duplicate keys within the file.
inline std::vector<ScoreRecord> parse_scores_csv(const std::string& text,
                                                 const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::vector<ScoreRecord> out;
    std::set<detail::RecordKey> seen;
    bool header_checked = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_checked) {
            if (line != kScoreCsvHeader)
                throw validation_error(origin + ":1: expected header '" +
                                       std::string(kScoreCsvHeader) + "', got '" + line + "'");
            header_checked = true;
            continue;
        }
        auto cells = detail::split_csv_line(line);
        std::string where = origin + ":" + std::to_string(lineno);
        if (cells.size() != 7)
            throw validation_error(where + ": expected 7 fields, got " +
                                   std::to_string(cells.size()));
        ScoreRecord r;
        r.model = cells[0];
        try {
            r.config = CompressionConfig::from_fields(Rational::parse_snapped(cells[1]),
                                                      Rational::parse(cells[2]), cells[3]);
            r.task = cells[4];
            std::size_t pos = 0;
            r.score = std::stod(cells[5], &pos);
            if (pos != cells[5].size()) throw validation_error("bad score");
            pos = 0;
            r.stderr_value = std::stod(cells[6], &pos);
            if (pos != cells[6].size()) throw validation_error("bad stderr");
        } catch (const std::exception& e) {
            throw validation_error(where + ": " + e.what());
        }
        detail::validate_record(r, where);
        if (!seen.insert({r.model, r.config, r.task}).second)
            throw validation_error(where + ": duplicate record key (" + r.model + ", " +
                                   r.config.to_string() + ", " + r.task + ")");
        out.push_back(std::move(r));
    }
    if (!header_checked) throw validation_error(origin + ": empty score file");
    return out;
}

inline std::vector<ScoreRecord> parse_scores_json(const std::string& text,
                                                  const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error(origin + ": " + e.what());
    }
    if (!doc.is_array()) throw validation_error(origin + ": expected a JSON array of records");
    std::vector<ScoreRecord> out;
    std::set<detail::RecordKey> seen;
    std::size_t idx = 0;
    for (const auto& item : doc) {
        std::string where = origin + "[" + std::to_string(idx++) + "]";
        try {
            ScoreRecord r;
            r.model = item.at("model").get<std::string>();
            const auto& cfg = item.at("config");
            r.config = CompressionConfig::from_fields(
                Rational::parse_snapped(cfg.at("sparsity").get<std::string>()),
                detail::bits_from_json(cfg.at("bits"), where),
                cfg.value("pattern", std::string("none")));
            r.task = item.at("task").get<std::string>();
            r.score = item.at("score").get<double>();
            r.stderr_value = item.value("stderr", 0.0);
            detail::validate_record(r, where);
            if (!seen.insert({r.model, r.config, r.task}).second)
                throw validation_error("duplicate record key (" + r.model + ", " +
                                       r.config.to_string() + ", " + r.task + ")");
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw validation_error(where + ": " + e.what());
        }
    }
    if (out.empty()) throw validation_error(origin + ": empty score file");
    return out;
}

enum class ScoreFormat { auto_detect, json, csv };

// Loads one score file or every score-schema CSV/JSON in a directory.
// Identical records appearing in several files collapse to one; records
// that share a key but disagree are rejected. Every model must come with
// its uncompressed baseline row (sparsity 0, 16 bit).
inline ScoreDataset load_scores(const std::filesystem::path& path,
                                ScoreFormat format = ScoreFormat::auto_detect) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) throw validation_error("no such score path: " + path.string());

    std::vector<std::pair<std::string, std::string>> sources; // (origin, content)
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (!entry.is_regular_file()) continue;
            auto ext = entry.path().extension().string();
            if (ext == ".csv" || ext == ".json") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::string content = read_file(f);
            if (f.extension() == ".csv") {
                // skip CSVs in other schemas (e.g. method-comparison tables)
                auto nl = content.find('\n');
                std::string header = content.substr(0, nl == std::string::npos ? content.size() : nl);
                if (!header.empty() && header.back() == '\r') header.pop_back();
                if (header != kScoreCsvHeader) continue;
            }
            sources.emplace_back(f.string(), std::move(content));
        }
        if (sources.empty())
            throw validation_error("no score-schema files found under " + path.string());
    } else {
        sources.emplace_back(path.string(), read_file(path));
    }

    std::map<detail::RecordKey, ScoreRecord> merged;
    for (const auto& [origin, content] : sources) {
        bool is_json = format == ScoreFormat::json;
        if (format == ScoreFormat::auto_detect) {
            if (origin.size() > 5 && origin.substr(origin.size() - 5) == ".json")
                is_json = true;
            else if (origin.size() > 4 && origin.substr(origin.size() - 4) == ".csv")
                is_json = false;
            else {
                auto first = content.find_first_not_of(" \t\r\n");
                is_json = first != std::string::npos &&
                          (content[first] == '[' || content[first] == '{');
            }
        }
        auto records = is_json ? parse_scores_json(content, origin)
                               : parse_scores_csv(content, origin);
        for (auto& r : records) {
            detail::RecordKey key{r.model, r.config, r.task};
            auto it = merged.find(key);
            if (it == merged.end()) {
                merged.emplace(std::move(key), std::move(r));
            } else if (it->second.score != r.score ||
                       it->second.stderr_value != r.stderr_value) {
                throw validation_error(origin + ": conflicting values for duplicate key (" +
                                       r.model + ", " + r.config.to_string() + ", " + r.task +
                                       ")");
            }
        }
    }

    ScoreDataset ds;
    for (auto& [key, record] : merged) ds.records.push_back(std::move(record));

    for (const std::string& model : ds.models()) {
        bool has_baseline = false;
        for (const auto& r : ds.records)
            if (r.model == model && r.config.is_baseline()) {
                has_baseline = true;
                break;
            }
        if (!has_baseline)
            throw validation_error("missing baseline (sparsity 0, 16 bit) rows for model '" +
                                   model + "'");
    }
    return ds;
}

// --- retention reporting ---------------------------------------------------

struct RetentionCell {
    double retention = 0.0;
    double stderr_value = 0.0;
};

struct RetentionRow {
    std::string model;
    CompressionConfig config;
    Rational tcr;
    std::vector<std::pair<std::string, RetentionCell>> per_task; // canonical order
    double sr1 = 1.0;
    double sr2_tasks = 1.0;                // from per-task score sums
    std::optional<double> sr_mean_based;   // retention of the published Mean column
    double sr = 1.0;                       // the value downstream metrics use
    std::string sr_source;                 // "mean_column" | "task_sums"
    std::optional<double> sr_stderr;
    SrcrBreakdown srcr;
    std::string srcr_kind; // baseline | pruning | quantization | joint
    bool mean_cell_flagged = false; // published Mean vs recomputed average off by > 0.05
};

struct RetentionReport {
    std::string model;
    std::vector<RetentionRow> rows;
    std::vector<std::string> task_columns; // union, canonical order
};

namespace detail {

inline int task_rank(const std::string& t) {
    if (t == "mmlu_pro") return 0;
    if (t == "bbh") return 1;
    if (t == "math") return 2;
    if (t == "mean") return 100;
    return 10;
}

inline bool task_order(const std::string& a, const std::string& b) {
    int ra = task_rank(a), rb = task_rank(b);
    return ra != rb ? ra < rb : a < b;
}

} // namespace detail

inline RetentionReport retention_report(const ScoreDataset& ds, const std::string& model) {
    RetentionReport report;
    report.model = model;

    std::map<std::string, ScoreRecord> baseline; // task -> record
    for (const auto& r : ds.records)
        if (r.model == model && r.config.is_baseline()) baseline[r.task] = r;
    if (baseline.empty())
        throw validation_error("no baseline rows for model '" + model + "'");

    std::set<std::string> task_union;
    for (auto cfg : ds.configs_for(model)) {
        RetentionRow row;
        row.model = model;
        row.config = cfg;
        row.tcr = theoretical_compression_rate(cfg);

        std::vector<TaskScore> task_scores; // non-mean tasks
        std::optional<TaskScore> mean_score;
        for (const auto& r : ds.records) {
            if (r.model != model || !(r.config == cfg)) continue;
            auto base = baseline.find(r.task);
            if (base == baseline.end())
                throw validation_error("model '" + model + "' config " + cfg.to_string() +
                                       " has task '" + r.task + "' with no baseline row");
            TaskScore ts{r.task, base->second.score, r.score, base->second.stderr_value,
                         r.stderr_value};
            if (r.task == "mean")
                mean_score = ts;
            else
                task_scores.push_back(ts);
        }
        std::sort(task_scores.begin(), task_scores.end(),
                  [](const TaskScore& a, const TaskScore& b) {
                      return detail::task_order(a.task, b.task);
                  });

        for (const auto& ts : task_scores) {
            row.per_task.emplace_back(ts.task,
                                      RetentionCell{retention_rate(ts), retention_stderr(ts)});
            task_union.insert(ts.task);
        }
        if (mean_score) {
            row.per_task.emplace_back(
                "mean", RetentionCell{retention_rate(*mean_score),
                                      retention_stderr(*mean_score)});
            task_union.insert("mean");
        }

        if (!task_scores.empty()) {
            row.sr1 = semantic_retention_sr1(task_scores);
            row.sr2_tasks = semantic_retention_sr2(task_scores);
            double num_var = 0.0, num = 0.0, den = 0.0, den_var = 0.0;
            for (const auto& ts : task_scores) {
                num += ts.compressed;
                den += ts.original;
                num_var += ts.compressed_stderr * ts.compressed_stderr;
                den_var += ts.original_stderr * ts.original_stderr;
            }
            row.sr_stderr = std::sqrt(num_var / (den * den) +
                                      num * num * den_var / (den * den * den * den));
        }
        if (mean_score) {
            row.sr_mean_based = retention_rate(*mean_score);
            row.sr_stderr = retention_stderr(*mean_score);
        }

        // published Mean cells are kept verbatim; flag the ones that drift
        // from the recomputed average of the per-task scores
        if (mean_score && !task_scores.empty()) {
            double avg = 0.0;
            for (const auto& ts : task_scores) avg += ts.compressed;
            avg /= static_cast<double>(task_scores.size());
            if (std::fabs(avg - mean_score->compressed) > 0.05) row.mean_cell_flagged = true;
        }

        if (row.sr_mean_based) {
            row.sr = *row.sr_mean_based;
            row.sr_source = "mean_column";
        } else if (!task_scores.empty()) {
            row.sr = row.sr2_tasks;
            row.sr_source = "task_sums";
        } else {
            throw validation_error("model '" + model + "' config " + cfg.to_string() +
                                   " has no scored tasks");
        }

        if (cfg.is_baseline()) {
            row.srcr = SrcrBreakdown{cfg, row.sr, 0.0, 0.0};
            row.srcr_kind = "baseline";
        } else if (cfg.is_joint()) {
            row.srcr = srcr_joint(cfg, row.sr);
            row.srcr_kind = "joint";
        } else if (cfg.has_pruning()) {
            row.srcr = srcr_pruning(cfg.sparsity, row.sr);
            row.srcr_kind = "pruning";
        } else {
            row.srcr = srcr_quantization(cfg.bits, row.sr);
            row.srcr_kind = "quantization";
        }
        report.rows.push_back(std::move(row));
    }

    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const RetentionRow& a, const RetentionRow& b) {
                         if (a.tcr != b.tcr) return a.tcr < b.tcr;
                         return a.config < b.config;
                     });
    report.task_columns.assign(task_union.begin(), task_union.end());
    std::sort(report.task_columns.begin(), report.task_columns.end(), detail::task_order);
    return report;
}

// Full rankings straight from a dataset, using the report's labeled Sr.
inline std::vector<SrcrBreakdown> search_dataset(const ScoreDataset& ds,
                                                 const std::string& model) {
    RetentionReport report = retention_report(ds, model);
    std::vector<std::pair<CompressionConfig, double>> records;
    for (const auto& row : report.rows) records.emplace_back(row.config, row.sr);
    return optimal_config_search(records);
}

// --- rendering -------------------------------------------------------------

namespace detail {

inline std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

} // namespace detail

enum class TableFormat { markdown, csv };

// Model | Config | TCr | per-task retention | Sr | SrCr, four fixed
// decimals, rows ordered by compression rate.
inline std::string emit_table(const RetentionReport& report, TableFormat format) {
    if (report.rows.empty()) throw validation_error("emit_table: empty report");
    std::vector<std::string> header{"model", "config", "tcr"};
    for (const auto& t : report.task_columns) header.push_back("r_" + t);
    header.push_back("sr");
    header.push_back("srcr");

    std::vector<std::vector<std::string>> lines;
    for (const auto& row : report.rows) {
        std::vector<std::string> cells{row.model, row.config.to_string(),
                                       row.tcr.to_percent_string()};
        for (const auto& t : report.task_columns) {
            auto it = std::find_if(row.per_task.begin(), row.per_task.end(),
                                   [&](const auto& p) { return p.first == t; });
            cells.push_back(it == row.per_task.end() ? std::string()
                                                     : detail::fixed4(it->second.retention));
        }
        cells.push_back(detail::fixed4(row.sr));
        cells.push_back(detail::fixed4(row.srcr.srcr));
        lines.push_back(std::move(cells));
    }

    std::string out;
    if (format == TableFormat::csv) {
        for (std::size_t i = 0; i < header.size(); ++i)
            out += (i ? "," : "") + header[i];
        out += "\n";
        for (const auto& cells : lines) {
            for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
            out += "\n";
        }
        return out;
    }
    out += "|";
    for (const auto& h : header) out += " " + h + " |";
    out += "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
    out += "\n";
    for (const auto& cells : lines) {
        out += "|";
        for (const auto& c : cells) out += " " + c + " |";
        out += "\n";
    }
    return out;
}

enum class FigureKind { retention_bars, srcr_bars, joint_vs_quant };

struct PlotPoint {
    std::string group;
    std::string series;
    double value = 0.0;
};

struct PlotBundle {
    std::vector<PlotPoint> points;
    std::string csv;
    std::string svg;
};

namespace detail {

// Minimal static SVG grouped bar chart; the CSV is the normative artifact.
inline std::string render_bar_svg(const std::vector<PlotPoint>& points,
                                  const std::string& title) {
    std::vector<std::string> groups, series;
    for (const auto& p : points) {
        if (std::find(groups.begin(), groups.end(), p.group) == groups.end())
            groups.push_back(p.group);
        if (std::find(series.begin(), series.end(), p.series) == series.end())
            series.push_back(p.series);
    }
    double vmax = 1e-12;
    for (const auto& p : points) vmax = std::max(vmax, p.value);

    const double bar_w = 18.0, gap = 14.0, chart_h = 220.0, left = 50.0, bottom = 70.0;
    double group_w = bar_w * static_cast<double>(series.size()) + gap;
    double width = left + group_w * static_cast<double>(groups.size()) + 20.0;
    double height = chart_h + bottom + 40.0;
    static const char* palette[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f",
                                    "#956cb4", "#8c613c", "#dc7ec0", "#797979"};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    svg << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << title << "</text>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << 30 + chart_h << "\" x2=\"" << width - 10
        << "\" y2=\"" << 30 + chart_h << "\" stroke=\"#333\"/>\n";
    for (std::size_t g = 0; g < groups.size(); ++g) {
        double x0 = left + group_w * static_cast<double>(g);
        for (std::size_t s = 0; s < series.size(); ++s) {
            double value = 0.0;
            for (const auto& p : points)
                if (p.group == groups[g] && p.series == series[s]) value = p.value;
            double h = chart_h * (value / vmax);
            double x = x0 + bar_w * static_cast<double>(s);
            svg << "<rect x=\"" << x << "\" y=\"" << 30 + chart_h - h << "\" width=\""
                << bar_w - 2 << "\" height=\"" << h << "\" fill=\"" << palette[s % 8]
                << "\"><title>" << groups[g] << " / " << series[s] << " = " << value
                << "</title></rect>\n";
        }
        svg << "<text x=\"" << x0 << "\" y=\"" << 30 + chart_h + 14
            << "\" font-size=\"9\" transform=\"rotate(30 " << x0 << " " << 30 + chart_h + 14
            << ")\">" << groups[g] << "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        double y = 44 + 16.0 * static_cast<double>(s);
        svg << "<rect x=\"" << width - 150 << "\" y=\"" << y - 10
            << "\" width=\"12\" height=\"12\" fill=\"" << palette[s % 8] << "\"/>\n";
        svg << "<text x=\"" << width - 134 << "\" y=\"" << y << "\" font-size=\"10\">"
            << series[s] << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

inline std::string points_to_csv(const std::vector<PlotPoint>& points) {
    std::string out = "group,series,value\n";
    for (const auto& p : points) out += p.group + "," + p.series + "," + fixed4(p.value) + "\n";
    return out;
}

} // namespace detail

// The three compression tiers the joint-vs-quantization comparison pairs up:
// equal-rate (joint, quant-only) partners at 75%, 81.25% and 87.5%.
inline std::vector<Rational> joint_comparison_tiers() {
    return {Rational(3, 4), Rational(13, 16), Rational(7, 8)};
}

inline PlotBundle emit_plot_data(const RetentionReport& report, FigureKind kind) {
    if (report.rows.empty()) throw validation_error("emit_plot_data: empty report");
    PlotBundle bundle;
    std::string title;

    switch (kind) {
        case FigureKind::retention_bars: {
            title = report.model + ": retention by task";
            for (const auto& row : report.rows) {
                for (const auto& [task, cell] : row.per_task) {
                    if (task == "mean") continue;
                    bundle.points.push_back({row.config.to_string(), task, cell.retention});
                }
                bundle.points.push_back({row.config.to_string(), "sr", row.sr});
            }
            break;
        }
        case FigureKind::srcr_bars: {
            title = report.model + ": retention-compression trade-off";
            for (const auto& row : report.rows) {
                if (row.srcr_kind == "baseline") continue;
                bundle.points.push_back(
                    {row.config.to_string(), "srcr_" + row.srcr_kind, row.srcr.srcr});
            }
            break;
        }
        case FigureKind::joint_vs_quant: {
            title = report.model + ": joint vs quantization-only at equal rate";
            bool any_tier = false;
            for (const Rational& tier : joint_comparison_tiers()) {
                std::vector<const RetentionRow*> joint_rows;
                const RetentionRow* quant_row = nullptr;
                for (const auto& row : report.rows) {
                    if (row.tcr != tier) continue;
                    if (row.config.is_joint())
                        joint_rows.push_back(&row);
                    else if (row.config.has_quantization() && !row.config.has_pruning())
                        quant_row = &row;
                }
                if (joint_rows.empty()) continue;
                if (!quant_row)
                    throw validation_error(
                        "joint_vs_quant: no quantization-only partner at rate " +
                        tier.to_percent_string());
                any_tier = true;
                std::vector<const RetentionRow*> rows{quant_row};
                rows.insert(rows.end(), joint_rows.begin(), joint_rows.end());
                for (const RetentionRow* row : rows) {
                    for (const auto& [task, cell] : row->per_task) {
                        if (task == "mean") continue;
                        bundle.points.push_back({tier.to_percent_string() + ":" + task,
                                                 row->config.to_string(), cell.retention});
                    }
                    bundle.points.push_back(
                        {tier.to_percent_string() + ":sr", row->config.to_string(), row->sr});
                }
            }
            if (!any_tier)
                throw validation_error("joint_vs_quant: report has no joint configs at the "
                                       "comparison rates");
            break;
        }
    }

    bundle.csv = detail::points_to_csv(bundle.points);
    bundle.svg = detail::render_bar_svg(bundle.points, title);
    return bundle;
}

// --- JSON views used by the CLI ---------------------------------------------

inline nlohmann::json to_json(const SrcrBreakdown& b) {
    return nlohmann::json{{"config", b.config.to_string()},
                          {"sr", b.sr},
                          {"compression_factor", b.compression_factor},
                          {"srcr", b.srcr},
                          {"tcr", theoretical_compression_rate(b.config).to_string()},
                          {"tcr_percent", theoretical_compression_rate(b.config).to_percent_string()}};
}

inline nlohmann::json to_json(const RetentionReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        nlohmann::json tasks = nlohmann::json::object();
        for (const auto& [task, cell] : row.per_task)
            tasks[task] = {{"retention", cell.retention}, {"stderr", cell.stderr_value}};
        nlohmann::json j{{"model", row.model},
                         {"config", row.config.to_string()},
                         {"tcr", row.tcr.to_string()},
                         {"tcr_percent", row.tcr.to_percent_string()},
                         {"tasks", tasks},
                         {"sr1", row.sr1},
                         {"sr2_task_sums", row.sr2_tasks},
                         {"sr", row.sr},
                         {"sr_source", row.sr_source},
                         {"srcr", row.srcr.srcr},
                         {"srcr_kind", row.srcr_kind},
                         {"mean_cell_flagged", row.mean_cell_flagged}};
        if (row.sr_mean_based) j["sr_mean_based"] = *row.sr_mean_based;
        if (row.sr_stderr) j["sr_stderr"] = *row.sr_stderr;
        rows.push_back(std::move(j));
    }
    return nlohmann::json{{"model", report.model}, {"rows", rows}};
}

} // namespace srcr
