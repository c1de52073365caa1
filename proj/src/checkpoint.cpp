#include "tcemb/checkpoint.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "tcemb/error.hpp"

namespace tcemb {

namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof(buf), "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

void append_row(std::string& out, const double* data, Index n) {
  for (Index j = 0; j < n; ++j) {
    if (j > 0) out.push_back(' ');
    append_double(out, data[j]);
  }
  out.push_back('\n');
}

std::vector<double> parse_row(const std::string& line, Index expected, const char* what) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(expected));
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (p < end) {
    while (p < end && *p == ' ') ++p;
    if (p >= end) break;
    double v = 0.0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) throw DataError(std::string("checkpoint: bad number in ") + what);
    values.push_back(v);
    p = next;
  }
  if (static_cast<Index>(values.size()) != expected) {
    throw DataError(std::string("checkpoint: wrong value count in ") + what);
  }
  return values;
}

std::string next_line(std::istringstream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(std::string("checkpoint: missing ") + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string checkpoint_to_string(const MlpParams& params) {
  params.validate();
  std::string out;
  out += kCheckpointMagic;
  out.push_back('\n');
  out += std::to_string(params.input_dim());
  out.push_back(' ');
  out += std::to_string(params.output_dim());
  out.push_back('\n');
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    const MlpLayer& layer = params.layers[k];
    out += "layer " + std::to_string(k + 1) + " " + std::to_string(layer.weight.rows()) + " " +
           std::to_string(layer.weight.cols()) + "\n";
    std::vector<double> row(static_cast<std::size_t>(layer.weight.cols()));
    for (Index i = 0; i < layer.weight.rows(); ++i) {
      for (Index j = 0; j < layer.weight.cols(); ++j) row[static_cast<std::size_t>(j)] = layer.weight(i, j);
      append_row(out, row.data(), layer.weight.cols());
    }
    append_row(out, layer.bias.data(), layer.bias.size());
    append_row(out, layer.slope.data(), layer.slope.size());
  }
  return out;
}

MlpParams checkpoint_from_string(const std::string& text) {
  std::istringstream in(text);
  if (next_line(in, "magic") != kCheckpointMagic) throw DataError("checkpoint: bad magic");
  const std::string dims = next_line(in, "dims");
  long n = 0, d = 0;
  if (std::sscanf(dims.c_str(), "%ld %ld", &n, &d) != 2 || n <= 0 || d <= 0) {
    throw DataError("checkpoint: bad dimension line");
  }

  MlpParams params;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    long index = 0, rows = 0, cols = 0;
    if (std::sscanf(line.c_str(), "layer %ld %ld %ld", &index, &rows, &cols) != 3 || rows <= 0 ||
        cols <= 0) {
      throw DataError("checkpoint: bad layer header: " + line);
    }
    MlpLayer layer;
    layer.weight.resize(rows, cols);
    for (long i = 0; i < rows; ++i) {
      const auto row = parse_row(next_line(in, "weight row"), cols, "weight row");
      for (long j = 0; j < cols; ++j) layer.weight(i, j) = row[static_cast<std::size_t>(j)];
    }
    const auto bias = parse_row(next_line(in, "bias"), cols, "bias");
    const auto slope = parse_row(next_line(in, "slope"), cols, "slope");
    layer.bias = Eigen::Map<const Vec>(bias.data(), cols);
    layer.slope = Eigen::Map<const Vec>(slope.data(), cols);
    params.layers.push_back(std::move(layer));
  }
  if (params.layers.empty()) throw DataError("checkpoint: no layers");
  params.validate();
  if (params.input_dim() != n || params.output_dim() != d) {
    throw DataError("checkpoint: layer shapes disagree with dimension line");
  }
  return params;
}

void save_checkpoint(const std::string& path, const MlpParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot open for writing: " + path);
  const std::string text = checkpoint_to_string(params);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError("checkpoint: write failed: " + path);
}

MlpParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace tcemb
