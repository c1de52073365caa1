#pragma once

#include <cmath>
#include <vector>

#include "tcemb/error.hpp"
#include "tcemb/types.hpp"

namespace tcemb {

/// Coefficient of determination with SS_tot about the mean of y_true.
/// A constant target yields 1 when the predictions are exact and 0
/// otherwise (degenerate-fold rule).
inline double r_squared(const Eigen::Ref<const Vec>& y_true,
                        const Eigen::Ref<const Vec>& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0) {
    throw DimError("r_squared: length mismatch");
  }
  const double ss_res = (y_true - y_pred).squaredNorm();
  const double mean = y_true.mean();
  const double ss_tot = (y_true.array() - mean).square().sum();
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

/// Confusion counts, rows = true class, cols = predicted class.
inline Mat confusion_matrix(const std::vector<int>& truth, const std::vector<int>& predicted,
                            int n_classes) {
  if (truth.size() != predicted.size()) throw DimError("confusion_matrix: length mismatch");
  Mat counts = Mat::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= n_classes || predicted[i] < 0 || predicted[i] >= n_classes) {
      throw DataError("confusion_matrix: label outside [0, n_classes)");
    }
    counts(truth[i], predicted[i]) += 1.0;
  }
  return counts;
}

/// Support-weighted mean of per-class F1. Classes absent from `truth`
/// get NaN in per_class and are excluded from the weighting.
inline double weighted_f1(const Mat& confusion, std::vector<double>* per_class = nullptr) {
  const Index k = confusion.rows();
  if (per_class) per_class->assign(static_cast<std::size_t>(k), std::nan(""));
  double total = 0.0;
  double weighted = 0.0;
  for (Index c = 0; c < k; ++c) {
    const double support = confusion.row(c).sum();
    if (support == 0.0) continue;
    const double tp = confusion(c, c);
    const double predicted = confusion.col(c).sum();
    const double precision = predicted > 0.0 ? tp / predicted : 0.0;
    const double recall = tp / support;
    const double f1 =
        (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    if (per_class) (*per_class)[static_cast<std::size_t>(c)] = f1;
    weighted += support * f1;
    total += support;
  }
  return total > 0.0 ? weighted / total : 0.0;
}

}  // namespace tcemb
