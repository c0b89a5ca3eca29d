#pragma once

#include <string>
#include <vector>

namespace countycast {

// Minimal CSV support: comma separator, double-quoted fields with "" escapes,
// lines starting with '#' skipped (schema comment convention for our outputs).

std::vector<std::string> split_csv_line(const std::string& line);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 if absent
};

CsvTable read_csv(const std::string& path);

std::string csv_escape(const std::string& field);

// Fixed formatting so identical inputs give byte-identical outputs.
std::string format_double(double v);

} // namespace countycast
