#include "tcemb/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "tcemb/csv.hpp"
#include "tcemb/error.hpp"
#include "tcemb/special.hpp"

namespace tcemb {

CohortTable filter_completeness(const CohortTable& table, double threshold) {
  if (threshold <= 0.0 || threshold > 1.0) {
    throw ConfigError("filter_completeness: threshold outside (0,1]");
  }
  const Index n = table.n_rows();
  std::vector<Index> kept_features;
  for (Index j = 0; j < table.n_features(); ++j) {
    long present = 0;
    for (Index i = 0; i < n; ++i) {
      if (!std::isnan(table.features(i, j))) ++present;
    }
    const double completeness =
        n == 0 ? 1.0 : static_cast<double>(present) / static_cast<double>(n);
    if (completeness >= threshold) kept_features.push_back(j);
  }
  if (kept_features.empty()) {
    throw DataError("filter_completeness: every feature fell below the threshold");
  }

  CohortTable out;
  out.feature_names.reserve(kept_features.size());
  for (Index j : kept_features) {
    out.feature_names.push_back(table.feature_names[static_cast<std::size_t>(j)]);
  }

  std::vector<Index> kept_rows;
  for (Index i = 0; i < n; ++i) {
    bool complete = true;
    for (Index j : kept_features) {
      if (std::isnan(table.features(i, j))) {
        complete = false;
        break;
      }
    }
    if (complete) kept_rows.push_back(i);
  }

  out.features.resize(static_cast<Index>(kept_rows.size()), static_cast<Index>(kept_features.size()));
  for (std::size_t r = 0; r < kept_rows.size(); ++r) {
    const auto i = static_cast<std::size_t>(kept_rows[r]);
    out.ids.push_back(table.ids[i]);
    out.sex.push_back(table.sex[i]);
    out.age.push_back(table.age[i]);
    out.visit_index.push_back(table.visit_index[i]);
    out.elapsed_years.push_back(table.elapsed_years[i]);
    out.condition.push_back(table.condition[i]);
    if (!table.age_group.empty()) out.age_group.push_back(table.age_group[i]);
    for (std::size_t c = 0; c < kept_features.size(); ++c) {
      out.features(static_cast<Index>(r), static_cast<Index>(c)) =
          table.features(kept_rows[r], kept_features[c]);
    }
  }
  return out;
}

// --- QuantileTransform ---------------------------------------------------

QuantileTransform::Entry QuantileTransform::build_entry(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  Entry entry;
  const std::size_t m = values.size();
  entry.sorted = values;
  std::size_t i = 0;
  while (i < m) {
    std::size_t j = i;
    while (j < m && values[j] == values[i]) ++j;
    // Ranks i+1 .. j (1-based) share the average rank.
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    const double prob = (avg_rank - 0.5) / static_cast<double>(m);
    entry.unique.push_back(values[i]);
    entry.scores.push_back(normal_quantile(prob));
    i = j;
  }
  return entry;
}

void QuantileTransform::fit_feature(const std::string& name, std::vector<double> values) {
  if (values.size() < 2) throw DataError("quantile transform: need at least 2 values for " + name);
  for (double v : values) {
    if (std::isnan(v)) throw DataError("quantile transform: null value while fitting " + name);
  }
  Entry entry = build_entry(std::move(values));
  if (entry.unique.size() < 2) {
    throw DataError("quantile transform: feature '" + name + "' is constant");
  }
  names_.push_back(name);
  entries_.push_back(std::move(entry));
}

bool QuantileTransform::has(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t QuantileTransform::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw DataError("quantile transform: no feature named '" + name + "'");
}

const std::vector<double>& QuantileTransform::sorted_values(const std::string& name) const {
  return entries_[index_of(name)].sorted;
}

double QuantileTransform::apply(const std::string& name, double value) const {
  const Entry& e = entries_[index_of(name)];
  const auto& u = e.unique;
  const auto& z = e.scores;
  if (value <= u.front()) return z.front();
  if (value >= u.back()) return z.back();
  const auto it = std::lower_bound(u.begin(), u.end(), value);
  const std::size_t k = static_cast<std::size_t>(it - u.begin());
  if (u[k] == value) return z[k];
  // Strictly between u[k-1] and u[k].
  const double t = (value - u[k - 1]) / (u[k] - u[k - 1]);
  return z[k - 1] + t * (z[k] - z[k - 1]);
}

std::vector<double> QuantileTransform::apply(const std::string& name,
                                             const std::vector<double>& values) const {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(apply(name, v));
  return out;
}

void QuantileTransform::save(const std::string& path) const {
  std::string out;
  out += kTransformMagic;
  out += '\n';
  out += std::to_string(names_.size());
  out += '\n';
  for (std::size_t i = 0; i < names_.size(); ++i) {
    out += "feature " + names_[i] + " " + std::to_string(entries_[i].sorted.size()) + "\n";
    for (std::size_t k = 0; k < entries_[i].sorted.size(); ++k) {
      if (k > 0) out += ' ';
      out += format_cell(entries_[i].sorted[k]);
    }
    out += '\n';
  }
  write_lines(path, out);
}

QuantileTransform QuantileTransform::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("quantile transform: cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTransformMagic) {
    throw DataError("quantile transform: bad magic in " + path);
  }
  if (!std::getline(in, line)) throw DataError("quantile transform: missing count");
  const std::size_t count = static_cast<std::size_t>(std::stoul(line));
  QuantileTransform transform;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw DataError("quantile transform: missing feature header");
    std::istringstream header(line);
    std::string tag, name;
    std::size_t m = 0;
    header >> tag >> name >> m;
    if (tag != "feature" || name.empty() || m < 2) {
      throw DataError("quantile transform: bad feature header: " + line);
    }
    if (!std::getline(in, line)) throw DataError("quantile transform: missing values for " + name);
    std::vector<double> values;
    values.reserve(m);
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p >= end) break;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw DataError("quantile transform: bad value for " + name);
      values.push_back(v);
      p = next;
    }
    if (values.size() != m) {
      throw DataError("quantile transform: value count mismatch for " + name);
    }
    transform.fit_feature(name, std::move(values));
  }
  return transform;
}

QuantileTransform quantile_normalize(CohortTable& table, const std::vector<std::string>& features,
                                     std::vector<std::string>* skipped) {
  QuantileTransform transform;
  for (const auto& name : features) {
    const Index j = table.feature_index(name);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(table.n_rows()));
    for (Index i = 0; i < table.n_rows(); ++i) values.push_back(table.features(i, j));
    std::vector<double> distinct = values;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) {
      if (skipped) skipped->push_back(name);
      continue;
    }
    transform.fit_feature(name, values);
    for (Index i = 0; i < table.n_rows(); ++i) {
      table.features(i, j) = transform.apply(name, table.features(i, j));
    }
  }
  return transform;
}

void apply_quantile_transform(CohortTable& table, const QuantileTransform& transform) {
  for (const auto& name : transform.names()) {
    if (!table.has_feature(name)) continue;
    const Index j = table.feature_index(name);
    for (Index i = 0; i < table.n_rows(); ++i) {
      table.features(i, j) = transform.apply(name, table.features(i, j));
    }
  }
}

void assign_age_groups(CohortTable& table, const AgeGroups& groups) {
  std::vector<int> assigned(static_cast<std::size_t>(table.n_rows()), -1);
  std::string offenders;
  int offender_count = 0;
  for (Index i = 0; i < table.n_rows(); ++i) {
    const int g = groups.group_of(table.age[static_cast<std::size_t>(i)]);
    if (g < 0) {
      if (offender_count < 10) {
        if (!offenders.empty()) offenders += ", ";
        offenders += table.ids[static_cast<std::size_t>(i)];
      }
      ++offender_count;
    }
    assigned[static_cast<std::size_t>(i)] = g;
  }
  if (offender_count > 0) {
    throw DataError("assign_age_groups: " + std::to_string(offender_count) +
                    " ids outside the configured span: " + offenders);
  }
  table.age_group = std::move(assigned);
}

LifestyleStrata stratify_lifestyle(const CohortTable& table, const LifestyleColumns& columns) {
  if (table.age_group.empty()) {
    throw StateError("stratify_lifestyle: assign age groups first");
  }
  const Index moderate = table.feature_index(columns.moderate_minutes);
  const Index vigorous = table.feature_index(columns.vigorous_minutes);
  const Index sleep = table.feature_index(columns.sleep_hours);

  LifestyleStrata strata;
  const std::size_t n = static_cast<std::size_t>(table.n_rows());
  strata.active.resize(n, 0);
  strata.median_sleep.resize(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    const double mod = table.features(static_cast<Index>(i), moderate);
    const double vig = table.features(static_cast<Index>(i), vigorous);
    strata.active[i] = (mod >= 150.0 || vig >= 75.0) ? 1 : 0;
  }

  // Sleep medians within sex x age group.
  std::map<std::pair<int, int>, std::vector<double>> cell_sleep;
  for (std::size_t i = 0; i < n; ++i) {
    cell_sleep[{table.sex[i], table.age_group[i]}].push_back(
        table.features(static_cast<Index>(i), sleep));
  }
  std::map<std::pair<int, int>, double> cell_median;
  for (auto& [key, values] : cell_sleep) {
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size();
    cell_median[key] =
        (m % 2 == 1) ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double median = cell_median[{table.sex[i], table.age_group[i]}];
    strata.median_sleep[i] =
        table.features(static_cast<Index>(i), sleep) >= median ? 1 : 0;
  }
  return strata;
}

SplitResult split_cohort(const CohortTable& table, double train_frac, double val_frac, Rng& rng,
                         const std::set<std::string>& holdout_ids) {
  if (train_frac < 0.0 || val_frac < 0.0 || train_frac + val_frac > 1.0) {
    throw ConfigError("split_cohort: fractions must be nonnegative and sum to at most 1");
  }
  SplitResult result;
  for (int sex_value : {0, 1}) {
    std::vector<Index> rows = table.rows_of_sex(sex_value);
    if (rows.empty()) continue;
    std::vector<Index> holdout_rows;
    std::vector<Index> free_rows;
    for (Index r : rows) {
      if (holdout_ids.count(table.ids[static_cast<std::size_t>(r)]) > 0) {
        holdout_rows.push_back(r);
      } else {
        free_rows.push_back(r);
      }
    }
    const auto n_sex = static_cast<double>(rows.size());
    const auto n_train = static_cast<std::size_t>(std::llround(train_frac * n_sex));
    const auto n_val = static_cast<std::size_t>(std::llround(val_frac * n_sex));
    if (n_train + n_val > rows.size()) {
      throw DataError("split_cohort: rounding exceeded the sex group size");
    }
    const std::size_t test_capacity = rows.size() - n_train - n_val;
    if (holdout_rows.size() > test_capacity) {
      throw DataError("split_cohort: " + std::to_string(holdout_rows.size()) +
                      " follow-up participants exceed the test capacity of " +
                      std::to_string(test_capacity) + " for sex " + std::to_string(sex_value));
    }
    rng.shuffle(free_rows);
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < n_train; ++k) result.train.push_back(free_rows[cursor++]);
    for (std::size_t k = 0; k < n_val; ++k) result.val.push_back(free_rows[cursor++]);
    while (cursor < free_rows.size()) result.test.push_back(free_rows[cursor++]);
    for (Index r : holdout_rows) result.test.push_back(r);
  }
  std::sort(result.train.begin(), result.train.end());
  std::sort(result.val.begin(), result.val.end());
  std::sort(result.test.begin(), result.test.end());
  return result;
}

TripletSet sample_triplets(const CohortTable& train_table, std::size_t count, Rng& rng) {
  std::unordered_map<std::string, std::vector<Index>> by_class;
  for (Index i = 0; i < train_table.n_rows(); ++i) {
    by_class[train_table.condition[static_cast<std::size_t>(i)]].push_back(i);
  }
  std::vector<std::vector<Index>> classes;
  classes.reserve(by_class.size());
  std::vector<std::string> class_names;
  for (auto& [name, members] : by_class) class_names.push_back(name);
  std::sort(class_names.begin(), class_names.end());
  for (const auto& name : class_names) classes.push_back(by_class[name]);

  std::vector<std::size_t> anchor_classes;  // classes usable as anchor/positive source
  std::size_t eligible = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c].size() >= 2) {
      anchor_classes.push_back(c);
      ++eligible;
    }
  }
  if (classes.size() < 2 || eligible < 2) {
    throw DataError("sample_triplets: need at least 2 classes with at least 2 members each");
  }

  const std::size_t n_total = static_cast<std::size_t>(train_table.n_rows());
  if (n_total >= (1u << 21)) {
    throw DataError("sample_triplets: table too large for the packed uniqueness key");
  }
  unsigned __int128 combos = 0;
  for (std::size_t c : anchor_classes) {
    const auto m = static_cast<unsigned __int128>(classes[c].size());
    combos += m * (m - 1) * static_cast<unsigned __int128>(n_total - classes[c].size());
  }
  if (static_cast<unsigned __int128>(count) > combos) {
    throw DataError("sample_triplets: requested " + std::to_string(count) +
                    " unique triplets but only " +
                    std::to_string(static_cast<unsigned long long>(combos)) + " exist");
  }

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(count * 2);
  TripletSet set;
  set.triplets.reserve(count);
  set.seed = rng.seed();
  set.source_split = "train";
  auto pack = [](Index a, Index p, Index n) {
    return (static_cast<std::uint64_t>(a) << 42) | (static_cast<std::uint64_t>(p) << 21) |
           static_cast<std::uint64_t>(n);
  };
  while (set.triplets.size() < count) {
    const std::size_t c = anchor_classes[rng.below(anchor_classes.size())];
    const auto& members = classes[c];
    const Index a = members[rng.below(members.size())];
    Index p = members[rng.below(members.size())];
    while (p == a) p = members[rng.below(members.size())];
    std::size_t c_neg = rng.below(classes.size());
    while (c_neg == c || classes[c_neg].empty()) c_neg = rng.below(classes.size());
    const Index n = classes[c_neg][rng.below(classes[c_neg].size())];
    const std::uint64_t key = pack(a, p, n);
    if (seen.insert(key).second) {
      set.triplets.push_back({a, p, n});
    }
  }
  return set;
}

ReferenceRanges ReferenceRanges::load(const std::string& path) {
  const CsvFile file = read_csv(path);
  if (file.header.size() != 3 || file.header[0] != "feature" || file.header[1] != "low" ||
      file.header[2] != "high") {
    throw DataError("reference ranges: expected header feature,low,high in " + path);
  }
  ReferenceRanges ranges;
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    const auto& cells = file.rows[r];
    if (cells.size() != 3) throw DataError("reference ranges: bad row " + std::to_string(r + 2));
    const double low = parse_cell(cells[1], r + 2, 2);
    const double high = parse_cell(cells[2], r + 2, 3);
    if (std::isnan(low) || std::isnan(high) || low > high) {
      throw DataError("reference ranges: invalid interval for " + cells[0]);
    }
    ranges.low_high[cells[0]] = {low, high};
  }
  return ranges;
}

void ReferenceRanges::save(const std::string& path) const {
  std::string out = "feature,low,high\n";
  for (const auto& [name, interval] : low_high) {
    out += name + "," + format_cell(interval.first) + "," + format_cell(interval.second) + "\n";
  }
  write_lines(path, out);
}

CohortTable label_conditions(const CohortTable& table,
                             const std::vector<std::string>& disease_codes,
                             const ReferenceRanges& ranges) {
  std::unordered_set<std::string> vocabulary(disease_codes.begin(), disease_codes.end());
  std::vector<std::pair<Index, std::pair<double, double>>> checked;
  for (const auto& [name, interval] : ranges.low_high) {
    if (table.has_feature(name)) checked.push_back({table.feature_index(name), interval});
  }

  CohortTable out = table;
  for (Index i = 0; i < table.n_rows(); ++i) {
    const std::string& code = table.condition[static_cast<std::size_t>(i)];
    if (code == kRawHealthyCode) {
      bool within = true;
      for (const auto& [j, interval] : checked) {
        const double v = table.features(i, j);
        if (std::isnan(v) || v < interval.first || v > interval.second) {
          within = false;
          break;
        }
      }
      out.condition[static_cast<std::size_t>(i)] = within ? kBonaFideHealthy : kApparentlyHealthy;
    } else if (vocabulary.count(code) == 0) {
      throw DataError("label_conditions: unknown condition code '" + code + "' for id " +
                      table.ids[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

const std::vector<std::string>& default_disease_codes() {
  static const std::vector<std::string> codes = {
      "diabetes",
      "diabetes_cardio",
      "diabetes_serious",
      "diabetes_cardio_serious",
      "multiple_nonmetabolic",
      "cardio",
      "cardio_serious",
      "respiratory",
      "cancer",
      "other_serious",
  };
  return codes;
}

}  // namespace tcemb
