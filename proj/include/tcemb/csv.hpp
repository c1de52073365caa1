#pragma once

#include <string>
#include <vector>

namespace tcemb {

/// Minimal CSV support: comma-separated, UTF-8, no quoting, empty cell
/// means null. Good enough for the machine-generated tables this
/// project exchanges.
std::vector<std::string> split_csv_line(const std::string& line);

/// Parses a double; empty -> NaN. Throws DataError with the given
/// location on garbage.
double parse_cell(const std::string& cell, std::size_t row, std::size_t col);

/// %.17g rendering so values round-trip exactly; NaN renders as the
/// empty cell.
std::string format_cell(double v);

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvFile read_csv(const std::string& path);
void write_lines(const std::string& path, const std::string& content);

}  // namespace tcemb
