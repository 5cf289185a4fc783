#include "uvae/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "uvae/errors.hpp"

namespace uvae {

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw ContractError("csv: no column named '" + name + "'");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream os(path);
    if (!os) throw NumericError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) os << ',';
        os << header[i];
    }
    os << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw ContractError("csv: row width != header width");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << format_double(row[i]);
        }
        os << '\n';
    }
    if (!os) throw NumericError("write failed: " + path);
}

CsvTable read_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open csv: " + path, 0);
    CsvTable table;
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty csv: " + path, 0);
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) table.header.push_back(cell);
    }
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(table.header.size());
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) {
                throw ParseError("csv: bad number '" + cell + "' at line " +
                                     std::to_string(line_no) + " in " + path,
                                 line_no);
            }
            row.push_back(v);
        }
        if (row.size() != table.header.size()) {
            throw ParseError("csv: row width mismatch at line " + std::to_string(line_no) +
                                 " in " + path,
                             line_no);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace uvae
