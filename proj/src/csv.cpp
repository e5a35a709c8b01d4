#include "voltcast/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "voltcast/errors.hpp"

namespace voltcast {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == delim) {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

}  // namespace

int CsvTable::col(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return int(i);
    return -1;
}

int CsvTable::require_col(const std::string& name) const {
    int i = col(name);
    if (i < 0) throw DataError("missing required CSV column '" + name + "'");
    return i;
}

CsvTable read_csv(std::istream& in, char delim) {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV input (header row required)");
    for (auto& h : split_line(line, delim)) t.header.push_back(trim(h));
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line, delim);
        for (auto& c : cells) c = trim(c);
        t.rows.push_back(std::move(cells));
    }
    return t;
}

CsvTable read_csv_file(const std::string& path, char delim) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file '" + path + "'");
    return read_csv(in, delim);
}

double parse_double_cell(const std::string& cell, size_t row_number, const std::string& col_name) {
    if (cell.empty()) return std::nan("");
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0') {
        std::ostringstream msg;
        msg << "row " << row_number << ": cannot parse '" << cell << "' as a number in column '"
            << col_name << "'";
        throw DataError(msg.str());
    }
    return v;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    // Try increasing precision until the value round-trips.
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells, char delim) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out << delim;
        out << cells[i];
    }
    out << '\n';
}

}  // namespace voltcast
