#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace voltcast {

/// Header + rows of raw string cells. Values are parsed lazily by callers so
/// that error messages can carry the 1-based data row number.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name, -1 if absent.
    int col(const std::string& name) const;
    /// Same, but throws DataError naming the column.
    int require_col(const std::string& name) const;
};

CsvTable read_csv(std::istream& in, char delim = ',');
CsvTable read_csv_file(const std::string& path, char delim = ',');

/// Parses a decimal cell; throws DataError with the row number on failure.
double parse_double_cell(const std::string& cell, size_t row_number, const std::string& col_name);

/// Shortest round-trip decimal rendering of a double ("%.17g" fallback),
/// NaN rendered as an empty cell.
std::string format_double(double v);

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells, char delim = ',');

}  // namespace voltcast
