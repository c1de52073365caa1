#include "tcemb/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "tcemb/error.hpp"

namespace tcemb {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  if (cell.empty()) return std::nan("");
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [next, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || next != end) {
    throw DataError("csv: unparseable cell '" + cell + "' at row " + std::to_string(row) +
                    " column " + std::to_string(col));
  }
  return v;
}

std::string format_cell(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

CsvFile read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("csv: cannot open: " + path);
  CsvFile file;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first) {
      file.header = split_csv_line(line);
      first = false;
      continue;
    }
    if (line.empty()) continue;
    file.rows.push_back(split_csv_line(line));
  }
  if (first) throw DataError("csv: empty file: " + path);
  return file;
}

void write_lines(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace tcemb
