#include "tcemb/cohort.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "tcemb/csv.hpp"
#include "tcemb/error.hpp"

namespace tcemb {

AgeGroups AgeGroups::defaults() {
  return AgeGroups{{{36, 45}, {46, 50}, {51, 55}, {56, 60}, {61, 65}, {66, 75}}};
}

int AgeGroups::group_of(double age) const {
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (age >= ranges[i].low && age <= ranges[i].high) return static_cast<int>(i);
  }
  return -1;
}

std::string AgeGroups::label(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= ranges.size()) return "?";
  return std::to_string(ranges[static_cast<std::size_t>(index)].low) + "-" +
         std::to_string(ranges[static_cast<std::size_t>(index)].high);
}

Index CohortTable::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    if (feature_names[i] == name) return static_cast<Index>(i);
  }
  throw DataError("cohort: no feature named '" + name + "'");
}

bool CohortTable::has_feature(const std::string& name) const {
  for (const auto& n : feature_names) {
    if (n == name) return true;
  }
  return false;
}

CohortTable CohortTable::subset(const std::vector<Index>& rows) const {
  CohortTable out;
  out.feature_names = feature_names;
  out.features.resize(static_cast<Index>(rows.size()), features.cols());
  out.ids.reserve(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    if (r < 0 || r >= n_rows()) throw DataError("cohort: subset row out of range");
    out.ids.push_back(ids[static_cast<std::size_t>(r)]);
    out.sex.push_back(sex[static_cast<std::size_t>(r)]);
    out.age.push_back(age[static_cast<std::size_t>(r)]);
    out.visit_index.push_back(visit_index[static_cast<std::size_t>(r)]);
    out.elapsed_years.push_back(elapsed_years[static_cast<std::size_t>(r)]);
    out.condition.push_back(condition[static_cast<std::size_t>(r)]);
    if (!age_group.empty()) out.age_group.push_back(age_group[static_cast<std::size_t>(r)]);
    out.features.row(static_cast<Index>(k)) = features.row(r);
  }
  return out;
}

std::vector<Index> CohortTable::rows_of_sex(int sex_value) const {
  std::vector<Index> rows;
  for (Index i = 0; i < n_rows(); ++i) {
    if (sex[static_cast<std::size_t>(i)] == sex_value) rows.push_back(i);
  }
  return rows;
}

long CohortTable::null_count() const {
  long nulls = 0;
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index j = 0; j < features.cols(); ++j) {
      if (std::isnan(features(i, j))) ++nulls;
    }
  }
  return nulls;
}

namespace {

constexpr std::size_t kFixedColumns = 6;
const char* const kFixedNames[kFixedColumns] = {"id",            "sex",
                                                "age",           "visit_index",
                                                "elapsed_years", "condition_code"};

}  // namespace

CohortTable load_cohort(const std::string& path) {
  const CsvFile file = read_csv(path);
  if (file.header.size() < kFixedColumns) {
    throw DataError("cohort: header too short in " + path);
  }
  for (std::size_t c = 0; c < kFixedColumns; ++c) {
    if (file.header[c] != kFixedNames[c]) {
      throw DataError("cohort: expected column '" + std::string(kFixedNames[c]) + "' at position " +
                      std::to_string(c) + ", found '" + file.header[c] + "' in " + path);
    }
  }

  CohortTable table;
  table.feature_names.assign(file.header.begin() + kFixedColumns, file.header.end());
  const std::size_t n_features = table.feature_names.size();
  const std::size_t n_rows = file.rows.size();
  table.features.resize(static_cast<Index>(n_rows), static_cast<Index>(n_features));
  table.ids.reserve(n_rows);

  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto& cells = file.rows[r];
    if (cells.size() != file.header.size()) {
      throw DataError("cohort: row " + std::to_string(r + 2) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(file.header.size()) + " in " + path);
    }
    if (cells[0].empty()) throw DataError("cohort: empty id at row " + std::to_string(r + 2));
    table.ids.push_back(cells[0]);
    const double sex_v = parse_cell(cells[1], r + 2, 2);
    if (sex_v != 0.0 && sex_v != 1.0) {
      throw DataError("cohort: sex must be 0 or 1 at row " + std::to_string(r + 2));
    }
    table.sex.push_back(static_cast<int>(sex_v));
    table.age.push_back(parse_cell(cells[2], r + 2, 3));
    table.visit_index.push_back(static_cast<int>(parse_cell(cells[3], r + 2, 4)));
    table.elapsed_years.push_back(parse_cell(cells[4], r + 2, 5));
    if (cells[5].empty()) {
      throw DataError("cohort: empty condition_code at row " + std::to_string(r + 2));
    }
    table.condition.push_back(cells[5]);
    for (std::size_t c = 0; c < n_features; ++c) {
      table.features(static_cast<Index>(r), static_cast<Index>(c)) =
          parse_cell(cells[kFixedColumns + c], r + 2, kFixedColumns + c + 1);
    }
  }
  return table;
}

CohortTable load_cohort(const std::string& path, const std::vector<FeatureSpec>& schema) {
  CohortTable table = load_cohort(path);
  if (table.feature_names.size() != schema.size()) {
    throw DataError("cohort: file has " + std::to_string(table.feature_names.size()) +
                    " features, schema expects " + std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name != table.feature_names[i]) {
      throw DataError("cohort: feature column '" + table.feature_names[i] +
                      "' does not match schema name '" + schema[i].name + "'");
    }
  }
  return table;
}

void save_cohort(const std::string& path, const CohortTable& table) {
  std::string out;
  out.reserve(static_cast<std::size_t>(table.n_rows() + 1) * 64);
  out += "id,sex,age,visit_index,elapsed_years,condition_code";
  for (const auto& name : table.feature_names) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (Index i = 0; i < table.n_rows(); ++i) {
    const auto r = static_cast<std::size_t>(i);
    out += table.ids[r];
    out += ',';
    out += std::to_string(table.sex[r]);
    out += ',';
    out += format_cell(table.age[r]);
    out += ',';
    out += std::to_string(table.visit_index[r]);
    out += ',';
    out += format_cell(table.elapsed_years[r]);
    out += ',';
    out += table.condition[r];
    for (Index j = 0; j < table.n_features(); ++j) {
      out += ',';
      out += format_cell(table.features(i, j));
    }
    out += '\n';
  }
  write_lines(path, out);
}

void save_triplets(const std::string& path, const TripletSet& set, const CohortTable& table) {
  std::string out;
  out.reserve(set.size() * 24);
  for (const auto& t : set.triplets) {
    out += table.ids[static_cast<std::size_t>(t.anchor)];
    out += ',';
    out += table.ids[static_cast<std::size_t>(t.positive)];
    out += ',';
    out += table.ids[static_cast<std::size_t>(t.negative)];
    out += '\n';
  }
  write_lines(path, out);
}

TripletSet load_triplets(const std::string& path, const CohortTable& table) {
  std::unordered_map<std::string, Index> row_of;
  row_of.reserve(table.ids.size());
  for (Index i = 0; i < table.n_rows(); ++i) row_of[table.ids[static_cast<std::size_t>(i)]] = i;

  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("triplets: cannot open: " + path);
  TripletSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) {
      throw DataError("triplets: line " + std::to_string(line_no) + " needs 3 ids");
    }
    TripletSet::Triplet t;
    for (int k = 0; k < 3; ++k) {
      const auto it = row_of.find(cells[static_cast<std::size_t>(k)]);
      if (it == row_of.end()) {
        throw DataError("triplets: unknown id '" + cells[static_cast<std::size_t>(k)] +
                        "' at line " + std::to_string(line_no));
      }
      (k == 0 ? t.anchor : k == 1 ? t.positive : t.negative) = it->second;
    }
    set.triplets.push_back(t);
  }
  return set;
}

}  // namespace tcemb
