#pragma once

#include <string>
#include <vector>

namespace seisgen::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

// Reads a comma-delimited UTF-8 file with a mandatory header row. Supports
// double-quoted fields with "" escapes.
Table read_file(const std::string& path);

std::string format_double(double v);  // round-trip exact
std::string escape_field(const std::string& s);

}  // namespace seisgen::csv
