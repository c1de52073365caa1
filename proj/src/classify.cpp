#include "tcemb/classify.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "tcemb/csv.hpp"
#include "tcemb/error.hpp"
#include "tcemb/metrics.hpp"
#include "tcemb/parallel.hpp"

namespace tcemb {

std::vector<int> knn_classify(const Eigen::Ref<const Mat>& train_reps,
                              const std::vector<int>& train_labels,
                              const Eigen::Ref<const Mat>& query_reps, int k) {
  const Index n = train_reps.rows();
  if (n == 0) throw DataError("knn_classify: empty training set");
  if (static_cast<std::size_t>(n) != train_labels.size()) {
    throw DimError("knn_classify: label count mismatch");
  }
  if (k < 1 || k > n) throw ConfigError("knn_classify: k outside [1, train size]");
  if (query_reps.cols() != train_reps.cols()) throw DimError("knn_classify: width mismatch");

  const Vec train_sq = train_reps.rowwise().squaredNorm();
  std::vector<int> predictions(static_cast<std::size_t>(query_reps.rows()), 0);

  parallel_for(static_cast<std::size_t>(query_reps.rows()), [&](std::size_t q) {
    // Squared distances preserve the ordering; ties break on the index.
    Vec dist = train_sq - 2.0 * (train_reps * query_reps.row(static_cast<Index>(q)).transpose());
    std::vector<std::pair<double, Index>> ranked(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ranked[static_cast<std::size_t>(i)] = {dist[i], i};
    std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end());
    std::map<int, int> votes;
    for (int t = 0; t < k; ++t) {
      votes[train_labels[static_cast<std::size_t>(ranked[static_cast<std::size_t>(t)].second)]] += 1;
    }
    int best_label = votes.begin()->first;
    int best_count = votes.begin()->second;
    for (const auto& [label, count] : votes) {
      if (count > best_count) {
        best_label = label;
        best_count = count;
      }
    }
    predictions[q] = best_label;
  });
  return predictions;
}

std::vector<int> lda_fit_predict(const Eigen::Ref<const Mat>& train_reps,
                                 const std::vector<int>& train_labels,
                                 const Eigen::Ref<const Mat>& query_reps) {
  const Index n = train_reps.rows();
  const Index f = train_reps.cols();
  if (static_cast<std::size_t>(n) != train_labels.size()) {
    throw DimError("lda_fit_predict: label count mismatch");
  }
  if (query_reps.cols() != f) throw DimError("lda_fit_predict: width mismatch");

  int n_classes = 0;
  for (int label : train_labels) {
    if (label < 0) throw DataError("lda_fit_predict: negative label");
    n_classes = std::max(n_classes, label + 1);
  }
  std::vector<long> counts(static_cast<std::size_t>(n_classes), 0);
  for (int label : train_labels) counts[static_cast<std::size_t>(label)] += 1;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0 && counts[c] < 2) {
      throw DataError("lda_fit_predict: class " + std::to_string(c) + " has fewer than 2 members");
    }
  }

  Mat means = Mat::Zero(n_classes, f);
  for (Index i = 0; i < n; ++i) {
    means.row(train_labels[static_cast<std::size_t>(i)]) += train_reps.row(i);
  }
  std::vector<int> present;
  for (int c = 0; c < n_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      means.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
      present.push_back(c);
    }
  }
  if (present.size() < 2) throw DataError("lda_fit_predict: need at least 2 classes");

  Mat scatter = Mat::Zero(f, f);
  for (Index i = 0; i < n; ++i) {
    const Vec centered =
        (train_reps.row(i) - means.row(train_labels[static_cast<std::size_t>(i)])).transpose();
    scatter.noalias() += centered * centered.transpose();
  }
  Mat cov = scatter / static_cast<double>(n - static_cast<long>(present.size()));
  const double ridge = 1e-6 * cov.diagonal().mean();
  cov.diagonal().array() += ridge;

  const Eigen::LDLT<Mat> solver(cov);
  // Discriminant: x' S^-1 mu_c - mu_c' S^-1 mu_c / 2 + log prior_c.
  Mat directions(f, static_cast<Index>(present.size()));
  Vec offsets(static_cast<Index>(present.size()));
  for (std::size_t idx = 0; idx < present.size(); ++idx) {
    const int c = present[idx];
    const Vec mu = means.row(c).transpose();
    const Vec dir = solver.solve(mu);
    directions.col(static_cast<Index>(idx)) = dir;
    offsets[static_cast<Index>(idx)] =
        -0.5 * mu.dot(dir) +
        std::log(static_cast<double>(counts[static_cast<std::size_t>(c)]) /
                 static_cast<double>(n));
  }

  std::vector<int> predictions(static_cast<std::size_t>(query_reps.rows()), present.front());
  const Mat scores = query_reps * directions;
  for (Index q = 0; q < query_reps.rows(); ++q) {
    double best = -std::numeric_limits<double>::infinity();
    int best_label = present.front();
    for (std::size_t idx = 0; idx < present.size(); ++idx) {
      const double score = scores(q, static_cast<Index>(idx)) + offsets[static_cast<Index>(idx)];
      if (score > best) {
        best = score;
        best_label = present[idx];
      }
    }
    predictions[static_cast<std::size_t>(q)] = best_label;
  }
  return predictions;
}

std::vector<ClassifierEval> evaluate_representations(const std::vector<RepresentationSet>& reps,
                                                     const std::vector<EvalTask>& tasks, int knn_k,
                                                     std::uint64_t seed) {
  std::vector<ClassifierEval> evals;
  for (const auto& rep : reps) {
    for (const std::string classifier : {"knn", "lda"}) {
      for (const auto& task : tasks) {
        if (rep.train.rows() != static_cast<Index>(task.train_labels.size()) ||
            rep.test.rows() != static_cast<Index>(task.test_labels.size())) {
          throw DimError("evaluate_representations: labels not aligned with " + rep.name);
        }
        std::vector<int> predicted;
        if (classifier == "knn") {
          predicted = knn_classify(rep.train, task.train_labels, rep.test, knn_k);
        } else {
          predicted = lda_fit_predict(rep.train, task.train_labels, rep.test);
        }
        ClassifierEval eval;
        eval.representation = rep.name;
        eval.classifier = classifier;
        eval.task = task.name;
        eval.seed = seed;
        eval.confusion = confusion_matrix(task.test_labels, predicted, task.n_classes);
        eval.weighted_f1 = weighted_f1(eval.confusion, &eval.per_class_f1);
        evals.push_back(std::move(eval));
      }
    }
  }
  return evals;
}

void write_classifier_csv(const std::string& path, const std::vector<ClassifierEval>& evals) {
  std::string out = "representation,classifier,task,weighted_f1,seed\n";
  for (const auto& e : evals) {
    out += e.representation + "," + e.classifier + "," + e.task + "," +
           format_cell(e.weighted_f1) + "," + std::to_string(e.seed) + "\n";
  }
  write_lines(path, out);
}

}  // namespace tcemb
