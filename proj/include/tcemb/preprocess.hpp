#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tcemb/cohort.hpp"
#include "tcemb/rng.hpp"

namespace tcemb {

inline constexpr const char* kTransformMagic = "TCQN1";

/// Drops features whose completeness falls below the threshold, then
/// drops every row still carrying a null. Throws DataError if no
/// feature survives.
CohortTable filter_completeness(const CohortTable& table, double threshold);

/// Rank-based inverse-normal transform fitted on training data. For
/// each feature the sorted training values are kept; new values map
/// through the training mid-ranks by linear interpolation, clamped at
/// the extremes. Tied training values share their average rank.
class QuantileTransform {
 public:
  void fit_feature(const std::string& name, std::vector<double> values);
  bool has(const std::string& name) const;
  double apply(const std::string& name, double value) const;
  std::vector<double> apply(const std::string& name, const std::vector<double>& values) const;
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& sorted_values(const std::string& name) const;

  void save(const std::string& path) const;
  static QuantileTransform load(const std::string& path);

 private:
  struct Entry {
    std::vector<double> sorted;  // full training sample, ascending
    std::vector<double> unique;  // distinct values
    std::vector<double> scores;  // inverse-normal of tie-averaged mid-ranks
  };
  std::size_t index_of(const std::string& name) const;
  static Entry build_entry(std::vector<double> values);

  std::vector<std::string> names_;
  std::vector<Entry> entries_;
};

/// Fits on the rows of `table` and overwrites the selected feature
/// columns with their normalized values. Constant features are skipped
/// and reported in `skipped` instead of fitted.
QuantileTransform quantile_normalize(CohortTable& table, const std::vector<std::string>& features,
                                     std::vector<std::string>* skipped = nullptr);

/// Maps the selected features of `table` through an already-fitted
/// transform (for validation/test/prospective rows).
void apply_quantile_transform(CohortTable& table, const QuantileTransform& transform);

/// Tags every row with its age group; throws DataError listing the ids
/// of rows outside the configured span.
void assign_age_groups(CohortTable& table, const AgeGroups& groups);

struct LifestyleColumns {
  std::string moderate_minutes = "act_moderate_min";
  std::string vigorous_minutes = "act_vigorous_min";
  std::string sleep_hours = "sleep_hours";
};

/// Active means moderate >= 150 or vigorous >= 75 weekly minutes.
/// Median-sleep means sleep at or above the (sex x age group) median.
/// Requires age groups to be assigned.
LifestyleStrata stratify_lifestyle(const CohortTable& table, const LifestyleColumns& columns);

struct SplitResult {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
};

/// Seeded split within each sex. Rows whose id is in holdout_ids
/// (participants with a follow-up visit) never land in train or val.
SplitResult split_cohort(const CohortTable& table, double train_frac, double val_frac, Rng& rng,
                         const std::set<std::string>& holdout_ids);

/// Uniform class-then-member sampling of `count` unique (anchor,
/// positive, negative) row triples. Anchor and positive share a
/// condition label, the negative differs, anchor != positive.
TripletSet sample_triplets(const CohortTable& train_table, std::size_t count, Rng& rng);

/// Clinical reference intervals keyed by feature name.
struct ReferenceRanges {
  std::map<std::string, std::pair<double, double>> low_high;

  static ReferenceRanges load(const std::string& path);
  void save(const std::string& path) const;
};

/// Resolves raw condition codes to the final label set: undiagnosed
/// rows become bona-fide healthy when every ranged biomarker is inside
/// its interval, otherwise apparently healthy; diagnosed rows keep
/// their code, which must belong to the vocabulary.
CohortTable label_conditions(const CohortTable& table,
                             const std::vector<std::string>& disease_codes,
                             const ReferenceRanges& ranges);

/// The ten aggregated disease codes used by default; with the two
/// healthy labels they form the 12-group vocabulary.
const std::vector<std::string>& default_disease_codes();

}  // namespace tcemb
