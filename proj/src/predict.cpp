#include "tcemb/predict.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "tcemb/csv.hpp"
#include "tcemb/error.hpp"
#include "tcemb/metrics.hpp"
#include "tcemb/parallel.hpp"

namespace tcemb {

std::string to_string(PredictionVariant variant) {
  switch (variant) {
    case PredictionVariant::kMarkerOnly: return "marker_only";
    case PredictionVariant::kAllBiomarkersLifestyle: return "marker_biomarkers_lifestyle";
    case PredictionVariant::kEmbeddings: return "marker_embeddings";
    case PredictionVariant::kEmbeddingsLifestyle: return "marker_embeddings_lifestyle";
  }
  return "?";
}

const std::vector<PredictionVariant>& all_prediction_variants() {
  static const std::vector<PredictionVariant> variants = {
      PredictionVariant::kMarkerOnly,
      PredictionVariant::kAllBiomarkersLifestyle,
      PredictionVariant::kEmbeddings,
      PredictionVariant::kEmbeddingsLifestyle,
  };
  return variants;
}

namespace {

struct Eligible {
  Index visit1_row;
  Index followup_row;
};

Mat assemble_inputs(const CohortTable& visit1, const Eigen::Ref<const Mat>& embeddings,
                    const CohortTable& followup, const std::vector<Eligible>& rows,
                    const std::vector<Index>& biomarker_cols,
                    const std::vector<Index>& lifestyle_cols, Index marker_col,
                    PredictionVariant variant, bool include_elapsed) {
  Index width = 3;  // age, sex, current marker value
  if (include_elapsed) width += 1;
  switch (variant) {
    case PredictionVariant::kMarkerOnly: break;
    case PredictionVariant::kAllBiomarkersLifestyle:
      width += static_cast<Index>(biomarker_cols.size()) - 1 +
               static_cast<Index>(lifestyle_cols.size());
      break;
    case PredictionVariant::kEmbeddings: width += embeddings.cols(); break;
    case PredictionVariant::kEmbeddingsLifestyle:
      width += embeddings.cols() + static_cast<Index>(lifestyle_cols.size());
      break;
  }

  Mat x(static_cast<Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i].visit1_row;
    const auto row = static_cast<Index>(i);
    Index c = 0;
    x(row, c++) = visit1.age[static_cast<std::size_t>(r)];
    x(row, c++) = visit1.sex[static_cast<std::size_t>(r)];
    x(row, c++) = visit1.features(r, marker_col);
    if (include_elapsed) {
      x(row, c++) = followup.elapsed_years[static_cast<std::size_t>(rows[i].followup_row)];
    }
    if (variant == PredictionVariant::kAllBiomarkersLifestyle) {
      for (Index j : biomarker_cols) {
        if (j == marker_col) continue;
        x(row, c++) = visit1.features(r, j);
      }
    }
    if (variant == PredictionVariant::kEmbeddings ||
        variant == PredictionVariant::kEmbeddingsLifestyle) {
      for (Index j = 0; j < embeddings.cols(); ++j) x(row, c++) = embeddings(r, j);
    }
    if (variant == PredictionVariant::kAllBiomarkersLifestyle ||
        variant == PredictionVariant::kEmbeddingsLifestyle) {
      for (Index j : lifestyle_cols) x(row, c++) = visit1.features(r, j);
    }
  }
  return x;
}

}  // namespace

PredictOutcome predict_future_values(const CohortTable& visit1,
                                     const Eigen::Ref<const Mat>& embeddings,
                                     const CohortTable& followup,
                                     const std::vector<std::string>& biomarkers,
                                     const std::vector<std::string>& lifestyle,
                                     const std::vector<std::string>& markers,
                                     const PredictOptions& options, Rng& rng) {
  if (options.cv_folds < 2) throw ConfigError("predict: need at least 2 folds");
  if (embeddings.rows() != visit1.n_rows()) {
    throw DimError("predict: embeddings not aligned with the visit-1 table");
  }

  std::unordered_map<std::string, Index> followup_row;
  for (Index i = 0; i < followup.n_rows(); ++i) {
    followup_row[followup.ids[static_cast<std::size_t>(i)]] = i;
  }

  std::vector<Eligible> eligible;
  for (Index i = 0; i < visit1.n_rows(); ++i) {
    const auto r = static_cast<std::size_t>(i);
    const auto it = followup_row.find(visit1.ids[r]);
    if (it == followup_row.end()) continue;
    const double elapsed = followup.elapsed_years[static_cast<std::size_t>(it->second)];
    if (std::isnan(elapsed) || elapsed < 2.0 || elapsed > 5.0) continue;
    if (options.healthy_only && visit1.condition[r] != kApparentlyHealthy &&
        visit1.condition[r] != kBonaFideHealthy) {
      continue;
    }
    eligible.push_back({i, it->second});
  }

  PredictOutcome outcome;
  outcome.eligible = static_cast<long>(eligible.size());
  if (static_cast<long>(eligible.size()) < options.min_participants) {
    outcome.skipped.push_back("all markers: only " + std::to_string(eligible.size()) +
                              " eligible participants (need " +
                              std::to_string(options.min_participants) + ")");
    return outcome;
  }

  // Seeded fold assignment partitioning the eligible cohort.
  std::vector<std::size_t> order(eligible.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<int> fold_of(eligible.size(), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    fold_of[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(options.cv_folds));
  }

  std::vector<Index> biomarker_cols, lifestyle_cols;
  for (const auto& name : biomarkers) biomarker_cols.push_back(visit1.feature_index(name));
  for (const auto& name : lifestyle) lifestyle_cols.push_back(visit1.feature_index(name));

  const auto& variants = all_prediction_variants();
  struct Job {
    std::size_t marker_idx;
    std::size_t variant_idx;
    int fold;
  };
  std::vector<Job> jobs;
  std::vector<Mat> inputs;          // per (marker, variant)
  std::vector<Vec> targets;         // per marker
  std::vector<std::string> usable;  // markers that pass the data checks

  for (const auto& marker : markers) {
    const Index marker_col = visit1.feature_index(marker);
    const Index target_col = followup.feature_index(marker);
    Vec y(static_cast<Index>(eligible.size()));
    bool ok = true;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
      y[static_cast<Index>(i)] = followup.features(eligible[i].followup_row, target_col);
      if (std::isnan(y[static_cast<Index>(i)])) ok = false;
    }
    if (!ok) {
      outcome.skipped.push_back(marker + ": null follow-up values");
      continue;
    }
    const std::size_t marker_idx = usable.size();
    usable.push_back(marker);
    targets.push_back(std::move(y));
    for (std::size_t v = 0; v < variants.size(); ++v) {
      inputs.push_back(assemble_inputs(visit1, embeddings, followup, eligible, biomarker_cols,
                                       lifestyle_cols, marker_col, variants[v],
                                       options.include_elapsed));
      for (int fold = 0; fold < options.cv_folds; ++fold) {
        jobs.push_back({marker_idx, v, fold});
      }
    }
  }

  std::vector<double> job_r2(jobs.size(), 0.0);
  std::vector<std::uint8_t> job_degenerate(jobs.size(), 0);
  parallel_for(jobs.size(), [&](std::size_t jidx) {
    const Job& job = jobs[jidx];
    const Mat& x = inputs[job.marker_idx * variants.size() + job.variant_idx];
    const Vec& y = targets[job.marker_idx];
    std::vector<Index> train_rows, test_rows;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
      (fold_of[i] == job.fold ? test_rows : train_rows).push_back(static_cast<Index>(i));
    }
    Mat x_train(static_cast<Index>(train_rows.size()), x.cols());
    Vec y_train(static_cast<Index>(train_rows.size()));
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      x_train.row(static_cast<Index>(i)) = x.row(train_rows[i]);
      y_train[static_cast<Index>(i)] = y[train_rows[i]];
    }
    Mat x_test(static_cast<Index>(test_rows.size()), x.cols());
    Vec y_test(static_cast<Index>(test_rows.size()));
    for (std::size_t i = 0; i < test_rows.size(); ++i) {
      x_test.row(static_cast<Index>(i)) = x.row(test_rows[i]);
      y_test[static_cast<Index>(i)] = y[test_rows[i]];
    }
    const GbtModel model = gbt_fit(x_train, y_train, options.gbt);
    const Vec predictions = gbt_predict(model, x_test);
    const double ss_tot = (y_test.array() - y_test.mean()).square().sum();
    if (ss_tot == 0.0) job_degenerate[jidx] = 1;
    job_r2[jidx] = r_squared(y_test, predictions);
  });

  // Assemble in (marker, variant) order.
  for (std::size_t m = 0; m < usable.size(); ++m) {
    for (std::size_t v = 0; v < variants.size(); ++v) {
      PredictionTaskResult result;
      result.marker = usable[m];
      result.variant = variants[v];
      for (std::size_t jidx = 0; jidx < jobs.size(); ++jidx) {
        if (jobs[jidx].marker_idx != m || jobs[jidx].variant_idx != v) continue;
        result.fold_r2.push_back(job_r2[jidx]);
        if (job_degenerate[jidx]) {
          outcome.warnings.push_back(result.marker + "/" + to_string(result.variant) + " fold " +
                                     std::to_string(jobs[jidx].fold) +
                                     ": constant held-out target, r2 reported as " +
                                     format_cell(job_r2[jidx]));
        }
      }
      double mean = 0.0;
      for (double r2 : result.fold_r2) mean += r2;
      mean /= static_cast<double>(result.fold_r2.size());
      double var = 0.0;
      for (double r2 : result.fold_r2) var += (r2 - mean) * (r2 - mean);
      result.r2_mean = mean;
      result.r2_sd = result.fold_r2.size() > 1
                         ? std::sqrt(var / static_cast<double>(result.fold_r2.size() - 1))
                         : 0.0;
      outcome.results.push_back(std::move(result));
    }
  }
  return outcome;
}

void write_prediction_folds_csv(const std::string& path, const PredictOutcome& outcome) {
  std::string out = "marker,variant,fold,r2\n";
  for (const auto& result : outcome.results) {
    for (std::size_t fold = 0; fold < result.fold_r2.size(); ++fold) {
      out += result.marker + "," + to_string(result.variant) + "," + std::to_string(fold) + "," +
             format_cell(result.fold_r2[fold]) + "\n";
    }
  }
  write_lines(path, out);
}

void write_prediction_summary_csv(const std::string& path, const PredictOutcome& outcome) {
  std::string out = "marker,variant,r2_mean,r2_sd\n";
  for (const auto& result : outcome.results) {
    out += result.marker + "," + to_string(result.variant) + "," + format_cell(result.r2_mean) +
           "," + format_cell(result.r2_sd) + "\n";
  }
  write_lines(path, out);
}

}  // namespace tcemb
