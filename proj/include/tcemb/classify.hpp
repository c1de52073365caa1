#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcemb/types.hpp"

namespace tcemb {

/// Majority vote among the k Euclidean-nearest training points.
/// Distance ties break toward the lower training index, vote ties
/// toward the smallest class id.
std::vector<int> knn_classify(const Eigen::Ref<const Mat>& train_reps,
                              const std::vector<int>& train_labels,
                              const Eigen::Ref<const Mat>& query_reps, int k);

/// Shared-covariance Gaussian discriminant with class priors from the
/// training frequencies. The pooled covariance is stabilized by a ridge
/// of 1e-6 times its mean diagonal. Every class needs >= 2 members.
std::vector<int> lda_fit_predict(const Eigen::Ref<const Mat>& train_reps,
                                 const std::vector<int>& train_labels,
                                 const Eigen::Ref<const Mat>& query_reps);

struct RepresentationSet {
  std::string name;
  Mat train;
  Mat test;
};

struct EvalTask {
  std::string name;  // "binary" or "multiclass-12"
  std::vector<int> train_labels;
  std::vector<int> test_labels;
  int n_classes = 2;
};

struct ClassifierEval {
  std::string representation;
  std::string classifier;
  std::string task;
  double weighted_f1 = 0.0;
  std::vector<double> per_class_f1;  // NaN for classes absent from the test split
  Mat confusion;
  std::uint64_t seed = 0;
};

/// Weighted F1 on the held-out split for every representation x
/// classifier (knn, lda) x task combination.
std::vector<ClassifierEval> evaluate_representations(const std::vector<RepresentationSet>& reps,
                                                     const std::vector<EvalTask>& tasks, int knn_k,
                                                     std::uint64_t seed);

void write_classifier_csv(const std::string& path, const std::vector<ClassifierEval>& evals);

}  // namespace tcemb
