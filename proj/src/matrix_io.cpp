#include "sparsedisc/matrix_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sparsedisc {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

double parse_real(const std::string& token, const std::string& source, std::size_t line) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != token.size() || !std::isfinite(value)) {
        throw ParseError(source, line, "expected a finite real, got '" + token + "'");
    }
    return value;
}

long parse_count(const std::string& token, const std::string& source, std::size_t line) {
    std::size_t used = 0;
    long value = -1;
    try {
        value = std::stol(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != token.size() || value < 0) {
        throw ParseError(source, line, "expected a nonnegative integer, got '" + token + "'");
    }
    return value;
}

std::vector<std::string> split(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    std::string token;
    while (in >> token) {
        out.push_back(token);
    }
    return out;
}

// Next non-comment, non-blank line of a Matrix Market body.
bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line[0] == '%') {
            continue;
        }
        if (!blank(line)) {
            return true;
        }
    }
    return false;
}

Matrix parse_matrix_market(std::istream& in, const std::string& header, const std::string& source,
                           std::size_t& line_no) {
    const auto fields = split(lower(header));
    if (fields.size() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix") {
        throw ParseError(source, line_no, "malformed header, expected '%%MatrixMarket matrix <format> <field> <symmetry>'");
    }
    const std::string& format = fields[2];
    const std::string& field = fields[3];
    const std::string& symmetry = fields[4];
    if (format != "coordinate" && format != "array") {
        throw ParseError(source, line_no, "unsupported format '" + format + "'");
    }
    if (field != "real" && field != "integer" && field != "double") {
        throw ParseError(source, line_no, "unsupported field '" + field + "'");
    }
    if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric") {
        throw ParseError(source, line_no, "unsupported symmetry '" + symmetry + "'");
    }

    std::string line;
    if (!next_data_line(in, line, line_no)) {
        throw ParseError(source, line_no, "missing size line");
    }
    const auto size = split(line);
    const bool coord = format == "coordinate";
    if (size.size() != (coord ? 3u : 2u)) {
        throw ParseError(source, line_no, coord ? "size line needs rows cols entries" : "size line needs rows cols");
    }
    const long rows = parse_count(size[0], source, line_no);
    const long cols = parse_count(size[1], source, line_no);
    if (rows == 0 || cols == 0) {
        throw ParseError(source, line_no, "matrix dimensions must be positive");
    }
    if (symmetry != "general" && rows != cols) {
        throw ParseError(source, line_no, "symmetric storage requires a square matrix");
    }
    Matrix m = Matrix::Zero(rows, cols);
    const double mirror = symmetry == "skew-symmetric" ? -1.0 : 1.0;

    if (coord) {
        const long entries = parse_count(size[2], source, line_no);
        for (long e = 0; e < entries; ++e) {
            if (!next_data_line(in, line, line_no)) {
                throw ParseError(source, line_no, "expected " + std::to_string(entries) + " entries, found " +
                                                      std::to_string(e));
            }
            const auto tok = split(line);
            if (tok.size() != 3) {
                throw ParseError(source, line_no, "coordinate entry needs 'row col value'");
            }
            const long i = parse_count(tok[0], source, line_no);
            const long j = parse_count(tok[1], source, line_no);
            if (i < 1 || i > rows || j < 1 || j > cols) {
                throw ParseError(source, line_no, "index out of range");
            }
            const double v = parse_real(tok[2], source, line_no);
            m(i - 1, j - 1) += v;
            if (symmetry != "general" && i != j) {
                m(j - 1, i - 1) += mirror * v;
            }
        }
    } else {
        // Column-major; symmetric storage lists the lower triangle only.
        for (long j = 0; j < cols; ++j) {
            const long first = symmetry == "general" ? 0 : (symmetry == "symmetric" ? j : j + 1);
            for (long i = first; i < rows; ++i) {
                if (!next_data_line(in, line, line_no)) {
                    throw ParseError(source, line_no, "array data ends early");
                }
                const auto tok = split(line);
                if (tok.size() != 1) {
                    throw ParseError(source, line_no, "array entry needs exactly one value");
                }
                const double v = parse_real(tok[0], source, line_no);
                m(i, j) = v;
                if (symmetry != "general") {
                    m(j, i) = mirror * v;
                }
            }
        }
    }
    if (next_data_line(in, line, line_no)) {
        throw ParseError(source, line_no, "unexpected data after the last entry");
    }
    return m;
}

}  // namespace

Matrix parse_matrix(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::vector<double>> rows;
    bool any = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!any && line.rfind("%%", 0) == 0) {
            return parse_matrix_market(in, line, source, line_no);
        }
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (blank(line)) {
            continue;
        }
        any = true;
        std::vector<double> row;
        for (const auto& tok : split(line)) {
            row.push_back(parse_real(tok, source, line_no));
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(source, line_no, "row has " + std::to_string(row.size()) + " entries, expected " +
                                                  std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw ParseError(source, line_no, "empty matrix file");
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        }
    }
    return m;
}

Matrix read_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("read_matrix: cannot open " + path);
    }
    return parse_matrix(in, path);
}

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    out << "%%MatrixMarket matrix array real general\n" << m.rows() << ' ' << m.cols() << '\n';
    for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) {
            out << format_double(m(i, j)) << '\n';
        }
    }
}

void write_matrix(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("write_matrix: cannot open " + path);
    }
    write_matrix(out, m);
}

SupportMask read_mask(const std::string& path) {
    const Matrix m = read_matrix(path);
    return SupportMask(SupportMask::Bits(m.array() != 0.0));
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
    if (!out_) {
        throw InvalidInput("CsvWriter: cannot open " + path);
    }
    row_ = header;
    end_row();
}

CsvWriter& CsvWriter::cell(const std::string& text) {
    row_.push_back(text);
    return *this;
}

CsvWriter& CsvWriter::cell(double value) { return cell(format_double(value)); }

CsvWriter& CsvWriter::cell(long long value) { return cell(std::to_string(value)); }

void CsvWriter::end_row() {
    if (row_.size() != columns_) {
        throw InvalidInput("CsvWriter: row width differs from header");
    }
    for (std::size_t c = 0; c < row_.size(); ++c) {
        out_ << (c == 0 ? "" : ",") << row_[c];
    }
    out_ << '\n';
    row_.clear();
}

}  // namespace sparsedisc
