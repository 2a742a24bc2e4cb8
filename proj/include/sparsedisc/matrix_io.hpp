#pragma once

#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "sparsedisc/support_mask.hpp"
#include "sparsedisc/types.hpp"

namespace sparsedisc {

// Matrix Market (`%%MatrixMarket matrix coordinate|array real|integer general|symmetric`)
// or dense text (rows of whitespace-separated reals, `#` comments). Coordinate
// duplicates are summed. Errors carry the offending line number.
[[nodiscard]] Matrix parse_matrix(std::istream& in, const std::string& source = "<matrix>");
[[nodiscard]] Matrix read_matrix(const std::string& path);

// Matrix Market array format with 17 significant digits.
void write_matrix(std::ostream& out, const Matrix& m);
void write_matrix(const std::string& path, const Matrix& m);

// Nonzero entries of a matrix file become true bits.
[[nodiscard]] SupportMask read_mask(const std::string& path);

// %.17g
[[nodiscard]] std::string format_double(double value);

// Comma-separated rows; numbers go through format_double.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    CsvWriter& cell(const std::string& text);
    CsvWriter& cell(double value);
    CsvWriter& cell(long long value);
    CsvWriter& cell(int value) { return cell(static_cast<long long>(value)); }
    CsvWriter& cell(Index value) { return cell(static_cast<long long>(value)); }
    // Throws InvalidInput when the row width differs from the header.
    void end_row();

private:
    std::ofstream out_;
    std::vector<std::string> row_;
    std::size_t columns_;
};

}  // namespace sparsedisc
