#pragma once

#include <string>
#include <vector>

#include "hugat/error.hpp"
#include "hugat/matrix.hpp"

namespace hugat::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<long> line_numbers;  // 1-based source line per row

    int column(const std::string& name) const;  // -1 if absent
};

Table read_file(const std::string& path);
Table parse(const std::string& text);

void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

std::string format_double(double v);  // shortest round-trip representation

void write_matrix(const std::string& path, const Matrix& m,
                  const std::vector<std::string>& header = {});

long parse_long(const std::string& s, long line);
double parse_double(const std::string& s, long line);

}  // namespace hugat::csv
