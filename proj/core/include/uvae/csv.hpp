#pragma once

#include <string>
#include <vector>

namespace uvae {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
};

/// Full-precision (%.17g) decimal floats; read(write(x)) == x bitwise.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
CsvTable read_csv(const std::string& path);

std::string format_double(double v);

} // namespace uvae
