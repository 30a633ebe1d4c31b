#pragma once

#include <string>
#include <vector>

namespace dbnlc::csv {

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
};

/// Reads a comma-separated file. Cells are plain text (no quoting);
/// surrounding whitespace is trimmed, empty cells stay empty.
Csv read_file(const std::string& path);
Csv parse(const std::string& text);

void write_file(const std::string& path, const Csv& table);

/// Fixed-notation formatting for numeric CSV output; repeated runs must be
/// byte-identical.
std::string format_double(double v, int decimals);

/// Shortest round-trip representation (17 significant digits trimmed).
std::string format_double_exact(double v);

} // namespace dbnlc::csv
