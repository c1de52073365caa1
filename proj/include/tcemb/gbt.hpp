#pragma once

#include <vector>

#include "tcemb/types.hpp"

namespace tcemb {

struct GbtParams {
  int rounds = 200;
  int depth = 3;
  double learning_rate = 0.1;

  void validate() const;
};

struct GbtNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // goes left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;
};

/// Stagewise sum of depth-limited regression trees fitted to residuals
/// with exact greedy variance-reduction splits over sorted feature
/// values. Prediction = base + lr * sum of tree outputs. A constant
/// target produces a model with zero trees returning the mean.
struct GbtModel {
  double base = 0.0;
  double learning_rate = 0.1;
  std::vector<std::vector<GbtNode>> trees;
};

GbtModel gbt_fit(const Eigen::Ref<const Mat>& x, const Eigen::Ref<const Vec>& y,
                 const GbtParams& params);
Vec gbt_predict(const GbtModel& model, const Eigen::Ref<const Mat>& x);

}  // namespace tcemb
