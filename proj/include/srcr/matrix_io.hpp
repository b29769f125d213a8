#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "srcr/matrix.hpp"

namespace srcr {

// On-disk matrix format: 8-byte magic "SRCRMAT1", u32 LE rows, u32 LE cols,
// then rows*cols little-endian float32 row-major. Values are widened to
// float64 on load. Masks travel in the same container with 0/1 entries.
inline constexpr char kMatrixMagic[8] = {'S', 'R', 'C', 'R', 'M', 'A', 'T', '1'};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_f32_le(std::string& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    put_u32_le(out, bits);
}

inline float get_f32_le(const unsigned char* p) {
    std::uint32_t bits = get_u32_le(p);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

} // namespace detail

inline std::string encode_matrix(const DenseMatrix& m) {
    std::string out;
    out.reserve(16 + m.size() * 4);
    out.append(kMatrixMagic, sizeof(kMatrixMagic));
    detail::put_u32_le(out, static_cast<std::uint32_t>(m.rows()));
    detail::put_u32_le(out, static_cast<std::uint32_t>(m.cols()));
    for (double v : m.data()) detail::put_f32_le(out, static_cast<float>(v));
    return out;
}

inline DenseMatrix decode_matrix(const std::string& bytes, const std::string& origin = "<memory>") {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMatrixMagic, 8) != 0)
        throw validation_error(origin + ": not a SRCRMAT1 matrix file");
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
    std::size_t rows = detail::get_u32_le(p + 8);
    std::size_t cols = detail::get_u32_le(p + 12);
    if (bytes.size() != 16 + rows * cols * 4)
        throw validation_error(origin + ": truncated matrix payload (" +
                               std::to_string(bytes.size()) + " bytes for " +
                               std::to_string(rows) + "x" + std::to_string(cols) + ")");
    std::vector<double> data(rows * cols);
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = static_cast<double>(detail::get_f32_le(p + 16 + i * 4));
    return DenseMatrix(rows, cols, std::move(data));
}

// Atomic file write: temp file in the target directory, then rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw validation_error("cannot open for writing: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw validation_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void save_matrix(const DenseMatrix& m, const std::filesystem::path& path) {
    write_file_atomic(path, encode_matrix(m));
}

// CSV form is accepted for small matrices only: one row per line,
// comma-separated decimals.
inline DenseMatrix load_matrix_csv(const std::string& text, const std::string& origin) {
    std::vector<double> data;
    std::size_t rows = 0, cols = 0;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t pos = 0;
                data.push_back(std::stod(cell, &pos));
                while (pos < cell.size() && (cell[pos] == ' ' || cell[pos] == '\t')) ++pos;
                if (pos != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw validation_error(origin + ":" + std::to_string(lineno) +
                                       ": bad numeric cell '" + cell + "'");
            }
            ++c;
        }
        if (rows == 0)
            cols = c;
        else if (c != cols)
            throw validation_error(origin + ":" + std::to_string(lineno) + ": expected " +
                                   std::to_string(cols) + " cells, got " + std::to_string(c));
        ++rows;
    }
    if (rows == 0) throw validation_error(origin + ": empty matrix");
    if (rows > 64 || cols > 64)
        throw validation_error(origin + ": CSV matrices are limited to 64x64, got " +
                               std::to_string(rows) + "x" + std::to_string(cols));
    return DenseMatrix(rows, cols, std::move(data));
}

// Loads by sniffing the magic; falls back to CSV.
inline DenseMatrix load_matrix(const std::filesystem::path& path) {
    std::string bytes = read_file(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kMatrixMagic, 8) == 0)
        return decode_matrix(bytes, path.string());
    return load_matrix_csv(bytes, path.string());
}

} // namespace srcr
