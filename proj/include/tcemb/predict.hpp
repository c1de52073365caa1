#pragma once

#include <string>
#include <vector>

#include "tcemb/cohort.hpp"
#include "tcemb/gbt.hpp"
#include "tcemb/rng.hpp"

namespace tcemb {

/// Input variants for the future-value regressions. Age, sex and the
/// current marker value are common to all of them.
enum class PredictionVariant {
  kMarkerOnly,
  kAllBiomarkersLifestyle,
  kEmbeddings,
  kEmbeddingsLifestyle,
};

std::string to_string(PredictionVariant variant);
const std::vector<PredictionVariant>& all_prediction_variants();

struct PredictionTaskResult {
  std::string marker;
  PredictionVariant variant = PredictionVariant::kMarkerOnly;
  std::vector<double> fold_r2;
  double r2_mean = 0.0;
  double r2_sd = 0.0;
};

struct PredictOptions {
  int cv_folds = 5;
  bool include_elapsed = false;  // adds elapsed years to every variant
  bool healthy_only = true;      // restrict to the two healthy labels
  long min_participants = 50;
  GbtParams gbt;
};

struct PredictOutcome {
  std::vector<PredictionTaskResult> results;  // (marker, variant) order
  std::vector<std::string> skipped;
  std::vector<std::string> warnings;
  long eligible = 0;
};

/// Five-fold cross-validated GBT regressions of each marker's follow-up
/// value on the variant inputs, over participants present in both
/// tables with a follow-up 2-5 years out. Folds partition the eligible
/// cohort; R-squared is computed on each held-out fold.
PredictOutcome predict_future_values(const CohortTable& visit1,
                                     const Eigen::Ref<const Mat>& embeddings,
                                     const CohortTable& followup,
                                     const std::vector<std::string>& biomarkers,
                                     const std::vector<std::string>& lifestyle,
                                     const std::vector<std::string>& markers,
                                     const PredictOptions& options, Rng& rng);

void write_prediction_folds_csv(const std::string& path, const PredictOutcome& outcome);
void write_prediction_summary_csv(const std::string& path, const PredictOutcome& outcome);

}  // namespace tcemb
