#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coreset/common.hpp"
#include "coreset/samplers.hpp"

namespace coreset {

using Json = nlohmann::ordered_json;

inline constexpr char kBinaryMagic[4] = {'S', 'C', 'R', '1'};

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_input_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string hex64(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string bytes_digest(const std::string& bytes) {
    return "fnv1a64:" + hex64(fnv1a64(bytes));
}

inline double parse_real(std::string_view tok, const std::string& context) {
    // trim spaces and a possible CR
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw invalid_input_error("bad real value '" + std::string(tok) + "' in " + context);
    return v;
}

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct RowFile {
    Matrix rows;
    std::string digest;
};

inline Matrix parse_rows_csv(const std::string& bytes, bool skip_header) {
    std::vector<std::vector<double>> data;
    std::size_t cols = 0;
    std::size_t pos = 0, lineno = 0;
    while (pos < bytes.size()) {
        std::size_t eol = bytes.find('\n', pos);
        if (eol == std::string::npos) eol = bytes.size();
        std::string_view line(bytes.data() + pos, eol - pos);
        pos = eol + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (skip_header && lineno == 1) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string_view::npos) comma = line.size();
            row.push_back(parse_real(line.substr(start, comma - start), "line " + std::to_string(lineno)));
            start = comma + 1;
        }
        if (cols == 0) cols = row.size();
        if (row.size() != cols)
            throw invalid_input_error("inconsistent column count at line " + std::to_string(lineno));
        data.push_back(std::move(row));
    }
    Matrix m(static_cast<Index>(data.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = data[i][j];
    return m;
}

inline Matrix parse_rows_binary(const std::string& bytes) {
    if (bytes.size() < 20 || std::memcmp(bytes.data(), kBinaryMagic, 4) != 0)
        throw invalid_input_error("binary input: bad magic");
    std::uint64_t rows = 0, cols = 0;
    std::memcpy(&rows, bytes.data() + 4, 8);
    std::memcpy(&cols, bytes.data() + 12, 8);
    std::size_t need = 20 + rows * cols * 8;
    if (bytes.size() != need)
        throw invalid_input_error("binary input: size mismatch (expected " + std::to_string(need) +
                                  " bytes, got " + std::to_string(bytes.size()) + ")");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    const char* p = bytes.data() + 20;
    for (std::uint64_t i = 0; i < rows; ++i)
        for (std::uint64_t j = 0; j < cols; ++j) {
            double v;
            std::memcpy(&v, p, 8);
            p += 8;
            m(static_cast<Index>(i), static_cast<Index>(j)) = v;
        }
    return m;
}

inline bool looks_binary(const std::string& bytes) {
    return bytes.size() >= 4 && std::memcmp(bytes.data(), kBinaryMagic, 4) == 0;
}

/// Reads a row file (binary when the SCR1 magic is present, CSV otherwise)
/// and records its content digest.
inline RowFile read_rows_auto(const std::string& path, bool skip_header = false) {
    std::string bytes = read_file_bytes(path);
    RowFile rf;
    rf.digest = bytes_digest(bytes);
    rf.rows = looks_binary(bytes) ? parse_rows_binary(bytes) : parse_rows_csv(bytes, skip_header);
    require_finite(rf.rows, "input rows");
    return rf;
}

inline void write_rows_binary(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_input_error("cannot write file: " + path);
    out.write(kBinaryMagic, 4);
    std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
    std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            double v = m(i, j);
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
}

inline void write_rows_csv(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_input_error("cannot write file: " + path);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_real(m(i, j));
        }
        out << '\n';
    }
}

/// Coreset file: header then one line per retained row with
/// index,probability,weight followed by the unscaled row values.
inline void write_coreset_csv(const std::string& path, const std::vector<CoresetEntry>& entries, Index dim) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_input_error("cannot write file: " + path);
    out << "index,probability,weight";
    for (Index j = 0; j < dim; ++j) out << ",x" << j;
    out << '\n';
    for (const auto& e : entries) {
        out << e.index << ',' << format_real(e.probability) << ',' << format_real(e.weight);
        for (Index j = 0; j < e.row.size(); ++j) out << ',' << format_real(e.row[j]);
        out << '\n';
    }
}

inline std::vector<CoresetEntry> read_coreset_csv(const std::string& path, int p) {
    std::string bytes = read_file_bytes(path);
    std::vector<CoresetEntry> entries;
    std::size_t pos = 0, lineno = 0;
    while (pos < bytes.size()) {
        std::size_t eol = bytes.find('\n', pos);
        if (eol == std::string::npos) eol = bytes.size();
        std::string_view line(bytes.data() + pos, eol - pos);
        pos = eol + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || lineno == 1) continue;  // skip header
        std::vector<double> vals;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string_view::npos) comma = line.size();
            vals.push_back(parse_real(line.substr(start, comma - start), "coreset line " + std::to_string(lineno)));
            start = comma + 1;
        }
        if (vals.size() < 4) throw invalid_input_error("coreset file: too few columns");
        CoresetEntry e;
        e.index = static_cast<std::size_t>(vals[0]);
        e.probability = vals[1];
        e.weight = vals[2];
        e.row = Eigen::Map<Vector>(vals.data() + 3, static_cast<Index>(vals.size() - 3));
        e.scaled_row = std::pow(e.probability, -1.0 / static_cast<double>(p)) * e.row;
        entries.push_back(std::move(e));
    }
    return entries;
}

/// Run manifest embedded into every report. Timing is deliberately not part
/// of written artifacts: identical seed and flags must give identical bytes.
inline Json make_manifest(const std::string& command, const Json& config, std::size_t input_rows,
                          Index input_dim, const std::string& input_digest,
                          const std::vector<std::string>& output_paths) {
    Json m;
    m["command"] = command;
    m["config"] = config;
    m["input"] = {{"rows", input_rows}, {"dim", input_dim}, {"checksum", input_digest}};
    m["outputs"] = output_paths;
    return m;
}

inline void write_json(const std::string& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_input_error("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

inline Json read_json(const std::string& path) {
    return Json::parse(read_file_bytes(path));
}

}  // namespace coreset
