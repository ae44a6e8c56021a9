#pragma once

// Labeled CSV ingest and output for count matrices.
//
// Count files carry a header row of column labels (the corner cell is
// ignored) and a leading label per data row; every remaining cell must be a
// nonnegative integer.  Parse failures name the offending row and column so
// one bad cell in a wide file can be located without bisecting it by hand.
// Fields are comma-separated with no quoting; labels therefore must not
// contain commas.

#include <coda/geometry.hpp>
#include <coda/metrics.hpp>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace coda {

// Parse problems in an input file: malformed cells, ragged rows, bad labels.
struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem-level problems: unreadable input, unwritable output.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LabeledCounts {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    Matrix counts;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

/**
 * Read a labeled count matrix.  Row/column coordinates in error messages are
 * 1-based file positions; the column label is included once the header has
 * been parsed.
 */
inline LabeledCounts ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::vector<std::vector<std::string>> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        lines.push_back(detail::split_csv_line(line));
    }
    if (lines.empty()) throw CsvError(path + ": empty file");

    LabeledCounts out;
    const std::vector<std::string>& header = lines.front();
    if (header.size() < 2)
        throw CsvError(path + ": header row needs a corner cell plus at least one column label");
    std::set<std::string> seen;
    for (std::size_t j = 1; j < header.size(); ++j) {
        const std::string label = detail::trim(header[j]);
        if (label.empty())
            throw CsvError(path + ": empty column label at column " + std::to_string(j + 1));
        if (!seen.insert(label).second)
            throw CsvError(path + ": duplicate column label '" + label + "'");
        out.col_labels.push_back(label);
    }

    const std::size_t width = header.size();
    const std::size_t n_rows = lines.size() - 1;
    if (n_rows == 0) throw CsvError(path + ": no data rows");
    out.counts.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(width - 1));

    seen.clear();
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const std::vector<std::string>& fields = lines[r];
        const std::string file_row = std::to_string(r + 1);
        if (fields.size() != width)
            throw CsvError(path + ": row " + file_row + " has " + std::to_string(fields.size()) +
                           " fields, expected " + std::to_string(width));
        const std::string label = detail::trim(fields[0]);
        if (label.empty()) throw CsvError(path + ": empty row label at row " + file_row);
        if (!seen.insert(label).second)
            throw CsvError(path + ": duplicate row label '" + label + "'");
        out.row_labels.push_back(label);

        for (std::size_t j = 1; j < width; ++j) {
            const std::string cell = detail::trim(fields[j]);
            const std::string where = "row " + file_row + " (label '" + label + "'), column " +
                                      std::to_string(j + 1) + " (label '" + out.col_labels[j - 1] +
                                      "')";
            if (cell.empty()) throw CsvError(path + ": " + where + ": empty cell");
            double v = 0.0;
            std::size_t used = 0;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw CsvError(path + ": " + where + ": unparseable value '" + cell + "'");
            }
            if (used != cell.size())
                throw CsvError(path + ": " + where + ": unparseable value '" + cell + "'");
            if (!std::isfinite(v))
                throw CsvError(path + ": " + where + ": not a finite number '" + cell + "'");
            if (v < 0.0) throw CsvError(path + ": " + where + ": negative count '" + cell + "'");
            if (v != std::floor(v))
                throw CsvError(path + ": " + where + ": non-integer count '" + cell + "'");
            out.counts(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j - 1)) = v;
        }
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::vector<std::string> default_labels(const std::string& prefix, Eigen::Index n) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) labels.push_back(prefix + std::to_string(i + 1));
    return labels;
}

/** Integer-valued cells print as plain integers, everything else as the
 * shortest round-trip decimal form. */
inline std::string format_cell(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.007199254740992e15)
        return std::to_string(static_cast<long long>(v));
    return format_double(v);
}

inline void write_matrix_csv(const std::string& path, const Matrix& values,
                             const std::vector<std::string>& row_labels,
                             const std::vector<std::string>& col_labels,
                             const std::string& corner = "id") {
    if (static_cast<Eigen::Index>(row_labels.size()) != values.rows() ||
        static_cast<Eigen::Index>(col_labels.size()) != values.cols())
        throw std::invalid_argument("write_matrix_csv: label count does not match the matrix");
    std::string body = corner;
    for (const std::string& c : col_labels) body += ',' + c;
    body += '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        body += row_labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < values.cols(); ++j) body += ',' + format_cell(values(i, j));
        body += '\n';
    }
    write_text_file(path, body);
}

}  // namespace coda
