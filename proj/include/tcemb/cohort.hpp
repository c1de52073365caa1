#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcemb/types.hpp"

namespace tcemb {

/// Raw condition code carried by participants without any diagnosis,
/// before the healthy/bona-fide split is applied.
inline constexpr const char* kRawHealthyCode = "none";
inline constexpr const char* kApparentlyHealthy = "apparently_healthy";
inline constexpr const char* kBonaFideHealthy = "bona_fide_healthy";

struct FeatureSpec {
  enum class Kind { kBiomarker, kLifestyle, kDemographic };
  std::string name;
  Kind kind = Kind::kBiomarker;
  double completeness = 1.0;
  bool marker_of_interest = false;
};

/// Ordered, non-overlapping inclusive age ranges.
struct AgeGroups {
  struct Range {
    int low = 0;
    int high = 0;
  };
  std::vector<Range> ranges;

  static AgeGroups defaults();
  int group_of(double age) const;  // -1 when outside every range
  std::string label(int index) const;
  std::size_t size() const { return ranges.size(); }
};

/// One participant-visit per row. Feature cells use NaN as the explicit
/// null marker until preprocessing removes them.
struct CohortTable {
  std::vector<std::string> ids;
  std::vector<int> sex;                // 0 female, 1 male
  std::vector<double> age;             // years
  std::vector<int> visit_index;        // 1 = first assessment, 2 = follow-up
  std::vector<double> elapsed_years;   // NaN on visit 1
  std::vector<std::string> condition;  // raw code, later the final label
  std::vector<std::string> feature_names;
  Mat features;                        // rows x features
  std::vector<int> age_group;          // -1 until assigned

  Index n_rows() const { return static_cast<Index>(ids.size()); }
  Index n_features() const { return features.cols(); }

  Index feature_index(const std::string& name) const;  // throws DataError
  bool has_feature(const std::string& name) const;
  CohortTable subset(const std::vector<Index>& rows) const;
  std::vector<Index> rows_of_sex(int sex_value) const;
  long null_count() const;
};

/// Participant-level lifestyle strata, aligned with the table rows.
struct LifestyleStrata {
  std::vector<std::uint8_t> active;        // 1 active, 0 less-active
  std::vector<std::uint8_t> median_sleep;  // 1 median-sleep, 0 less-sleep
};

/// Anchor/positive/negative row indices into one (training) table.
struct TripletSet {
  struct Triplet {
    Index anchor = 0;
    Index positive = 0;
    Index negative = 0;
  };
  std::vector<Triplet> triplets;
  std::uint64_t seed = 0;
  std::string source_split;

  std::size_t size() const { return triplets.size(); }
};

/// Loads the cohort CSV layout: id, sex, age, visit_index,
/// elapsed_years, condition_code, then one column per feature. An empty
/// cell is a null. Errors carry the offending row and column.
CohortTable load_cohort(const std::string& path);

/// Same, but the feature columns must match the schema names exactly.
CohortTable load_cohort(const std::string& path, const std::vector<FeatureSpec>& schema);

void save_cohort(const std::string& path, const CohortTable& table);

/// Triplet file: one "anchor_id,positive_id,negative_id" line per
/// triplet, no header.
void save_triplets(const std::string& path, const TripletSet& set, const CohortTable& table);
TripletSet load_triplets(const std::string& path, const CohortTable& table);

}  // namespace tcemb
