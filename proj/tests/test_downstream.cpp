#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

#include "tcemb/classify.hpp"
#include "tcemb/error.hpp"
#include "tcemb/gbt.hpp"
#include "tcemb/metrics.hpp"
#include "tcemb/parallel.hpp"
#include "tcemb/pca.hpp"
#include "tcemb/rng.hpp"

using namespace tcemb;

namespace {

Mat random_mat(Index rows, Index cols, Rng& rng) {
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("r_squared basics") {
  Vec y(4), p(4);
  y << 1.0, 2.0, 3.0, 4.0;
  p = y;
  REQUIRE(r_squared(y, p) == 1.0);
  p << 2.5, 2.5, 2.5, 2.5;  // mean predictor
  REQUIRE(r_squared(y, p) == doctest::Approx(0.0).epsilon(1e-12));

  // Degenerate target: 1 iff exact, else 0.
  Vec flat = Vec::Constant(3, 2.0);
  REQUIRE(r_squared(flat, flat) == 1.0);
  Vec off(3);
  off << 2.0, 2.0, 2.1;
  REQUIRE(r_squared(flat, off) == 0.0);
}

TEST_CASE("weighted f1 from the confusion matrix") {
  // Perfect predictions.
  Mat perfect = Mat::Zero(3, 3);
  perfect.diagonal() << 5, 3, 2;
  REQUIRE(weighted_f1(perfect) == doctest::Approx(1.0));

  // Balanced binary, single-class predictor: 0.5 * 2/3 = 1/3.
  Mat degenerate = Mat::Zero(2, 2);
  degenerate(0, 0) = 50;
  degenerate(1, 0) = 50;
  REQUIRE(weighted_f1(degenerate) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // Class absent from the test split: NaN per-class, excluded from weight.
  Mat missing = Mat::Zero(3, 3);
  missing(0, 0) = 4;
  missing(1, 1) = 4;
  std::vector<double> per_class;
  const double f1 = weighted_f1(missing, &per_class);
  REQUIRE(f1 == doctest::Approx(1.0));
  REQUIRE(std::isnan(per_class[2]));

  // Identity: weighted f1 equals the support-weighted mean of per-class.
  Rng rng(1);
  std::vector<int> truth, pred;
  for (int i = 0; i < 300; ++i) {
    truth.push_back(static_cast<int>(rng.below(4)));
    pred.push_back(static_cast<int>(rng.below(4)));
  }
  const Mat confusion = confusion_matrix(truth, pred, 4);
  std::vector<double> pc;
  const double wf1 = weighted_f1(confusion, &pc);
  double manual = 0.0;
  for (int c = 0; c < 4; ++c) {
    const double support = confusion.row(c).sum();
    manual += support / 300.0 * pc[static_cast<std::size_t>(c)];
  }
  REQUIRE(wf1 == doctest::Approx(manual).epsilon(1e-12));

  // Row sums are the class supports.
  for (int c = 0; c < 4; ++c) {
    long support = 0;
    for (int t : truth) {
      if (t == c) ++support;
    }
    REQUIRE(confusion.row(c).sum() == doctest::Approx(static_cast<double>(support)));
  }
}

TEST_CASE("knn hand-built votes") {
  Mat train(5, 2);
  train << 0.0, 0.0,
           0.1, 0.0,
           0.2, 0.1,
           5.0, 5.0,
           5.1, 5.0;
  const std::vector<int> labels = {0, 0, 1, 1, 1};

  // Third query: nearest is point 2 (label 1), then point 1 (label 0),
  // then an exact tie between points 0 and 3 resolved toward index 0.
  Mat queries(3, 2);
  queries << 0.05, 0.0,   // neighbors 0,1,2 -> votes {0:2, 1:1} -> 0
             5.05, 5.0,   // neighbors 3,4,2 -> votes {1:3}      -> 1
             2.5, 2.5;    // neighbors 2,1,0 -> votes {0:2, 1:1} -> 0
  const auto k3 = knn_classify(train, labels, queries, 3);
  REQUIRE(k3 == std::vector<int>{0, 1, 0});

  // k = 1 on a training point returns that point's label.
  const auto k1 = knn_classify(train, labels, train, 1);
  REQUIRE(k1 == labels);

  // k = train size votes the global majority for every query.
  const auto k5 = knn_classify(train, labels, queries, 5);
  REQUIRE(k5 == std::vector<int>{1, 1, 1});
}

TEST_CASE("knn tie-breaking is by index then class id") {
  Mat train(2, 1);
  train << 1.0, -1.0;
  const std::vector<int> labels = {1, 0};
  Mat query(1, 1);
  query << 0.0;
  // Equidistant: k=1 must pick the lower training index (label 1).
  REQUIRE(knn_classify(train, labels, query, 1) == std::vector<int>{1});
  // k=2 votes tie between class 0 and 1: smallest class id wins.
  REQUIRE(knn_classify(train, labels, query, 2) == std::vector<int>{0});

  CHECK_THROWS_AS(knn_classify(train, labels, query, 3), ConfigError);
  CHECK_THROWS_AS(knn_classify(Mat(0, 1), {}, query, 1), DataError);
}

TEST_CASE("lda separates two isotropic gaussians") {
  Rng rng(2);
  const int n = 600;
  Mat train(2 * n, 3);
  std::vector<int> labels;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) train(i, j) = rng.normal();
    train(i, 0) += 4.0;
    labels.push_back(0);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) train(n + i, j) = rng.normal();
    train(n + i, 0) -= 4.0;
    labels.push_back(1);
  }
  Mat queries(2 * 200, 3);
  std::vector<int> expected;
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 3; ++j) queries(i, j) = rng.normal();
    queries(i, 0) += 4.0;
    expected.push_back(0);
  }
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 3; ++j) queries(200 + i, j) = rng.normal();
    queries(200 + i, 0) -= 4.0;
    expected.push_back(1);
  }
  const auto predicted = lda_fit_predict(train, labels, queries);
  int correct = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (predicted[i] == expected[static_cast<std::size_t>(i)]) ++correct;
  }
  REQUIRE(static_cast<double>(correct) / 400.0 >= 0.99);

  // A query at a class mean lands in that class.
  Mat at_mean(1, 3);
  at_mean << 4.0, 0.0, 0.0;
  REQUIRE(lda_fit_predict(train, labels, at_mean) == std::vector<int>{0});
}

TEST_CASE("lda handles duplicated feature columns via the ridge") {
  Rng rng(3);
  Mat train(80, 2);
  std::vector<int> labels;
  for (int i = 0; i < 80; ++i) {
    train(i, 0) = rng.normal() + (i < 40 ? 2.0 : -2.0);
    train(i, 1) = rng.normal();
    labels.push_back(i < 40 ? 0 : 1);
  }
  Mat duplicated(80, 4);
  duplicated.leftCols(2) = train;
  duplicated.rightCols(2) = train;

  Mat queries = random_mat(30, 2, rng);
  Mat queries_dup(30, 4);
  queries_dup.leftCols(2) = queries;
  queries_dup.rightCols(2) = queries;

  REQUIRE(lda_fit_predict(train, labels, queries) ==
          lda_fit_predict(duplicated, labels, queries_dup));
}

TEST_CASE("lda rejects singleton classes") {
  Mat train(3, 2);
  train << 0.0, 0.0, 1.0, 1.0, 5.0, 5.0;
  CHECK_THROWS_AS(lda_fit_predict(train, {0, 0, 1}, train), DataError);
}

TEST_CASE("pca recovers an exact low-dimensional subspace") {
  Rng rng(4);
  // Points in a 2-dimensional subspace of R^5.
  Mat basis = random_mat(2, 5, rng);
  Mat coeff = random_mat(400, 2, rng);
  Mat rows = coeff * basis;
  const PcaTransform transform = pca_fit(rows, 2);
  const Mat reduced = pca_apply(transform, rows);
  // Reconstruction from 2 components is exact.
  const Mat reconstructed =
      (reduced * transform.components).rowwise() + transform.mean.transpose();
  REQUIRE((reconstructed - rows).cwiseAbs().maxCoeff() <= 1e-8);

  // Asking beyond the rank fails.
  CHECK_THROWS_AS(pca_fit(rows, 3), DataError);
}

TEST_CASE("pca matches the eigensolver on random data") {
  Rng rng(5);
  const Mat rows = random_mat(300, 6, rng);
  const PcaTransform transform = pca_fit(rows, 4);

  const Mat centered = rows.rowwise() - rows.colwise().mean();
  const Mat cov = centered.transpose() * centered / 299.0;
  Eigen::SelfAdjointEigenSolver<Mat> solver(cov);
  const Vec eigenvalues = solver.eigenvalues().reverse();
  for (int c = 0; c < 4; ++c) {
    const double share = transform.explained_share[c];
    REQUIRE(share == doctest::Approx(eigenvalues[c] / cov.trace()).epsilon(1e-6));
    // Component equals the eigenvector up to sign.
    const Vec expected = solver.eigenvectors().col(5 - c);
    const double alignment = std::abs(transform.components.row(c).dot(expected.transpose()));
    REQUIRE(alignment == doctest::Approx(1.0).epsilon(1e-6));
  }

  // Orthonormal to 1e-8.
  const Mat gram = transform.components * transform.components.transpose();
  REQUIRE((gram - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("pca on a known correlated gaussian aligns with the principal axis") {
  Rng rng(6);
  // x = z1, y = z1 + 0.3 z2: principal axis analytic from the 2x2 covariance.
  const int n = 20000;
  Mat rows(n, 2);
  for (int i = 0; i < n; ++i) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    rows(i, 0) = z1;
    rows(i, 1) = z1 + 0.3 * z2;
  }
  Mat cov_true(2, 2);
  cov_true << 1.0, 1.0, 1.0, 1.09;
  Eigen::SelfAdjointEigenSolver<Mat> solver(cov_true);
  const Vec axis = solver.eigenvectors().col(1);
  const PcaTransform transform = pca_fit(rows, 1);
  const double cosine = std::abs(transform.components.row(0).dot(axis.transpose()));
  REQUIRE(std::acos(std::min(1.0, cosine)) < 1.0 * M_PI / 180.0);
}

TEST_CASE("pca explained shares on isotropic noise are roughly equal") {
  Rng rng(7);
  const Mat rows = random_mat(10000, 5, rng);
  const PcaTransform transform = pca_fit(rows, 5);
  for (int c = 0; c < 5; ++c) {
    REQUIRE(transform.explained_share[c] == doctest::Approx(0.2).epsilon(0.10));
  }
}

TEST_CASE("gbt constant target returns the mean with zero trees") {
  Rng rng(8);
  const Mat x = random_mat(50, 3, rng);
  const Vec y = Vec::Constant(50, 3.75);
  const GbtModel model = gbt_fit(x, y, GbtParams{});
  REQUIRE(model.trees.empty());
  const Vec pred = gbt_predict(model, x);
  REQUIRE((pred.array() - 3.75).abs().maxCoeff() == 0.0);
}

TEST_CASE("gbt stump recovers a step function exactly") {
  Mat x(12, 1);
  Vec y(12);
  for (int i = 0; i < 12; ++i) {
    x(i, 0) = static_cast<double>(i);
    y[i] = i < 6 ? -1.0 : 2.0;
  }
  GbtParams params;
  params.rounds = 1;
  params.depth = 1;
  params.learning_rate = 1.0;
  const GbtModel model = gbt_fit(x, y, params);
  REQUIRE(model.trees.size() == 1);
  const Vec pred = gbt_predict(model, x);
  REQUIRE((pred - y).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gbt training error is non-increasing per round") {
  Rng rng(9);
  const Mat x = random_mat(200, 4, rng);
  Vec y(200);
  for (int i = 0; i < 200; ++i) {
    y[i] = std::sin(x(i, 0)) + 0.5 * x(i, 1) * x(i, 2) + 0.1 * rng.normal();
  }
  GbtParams params;
  params.rounds = 40;
  params.depth = 3;
  params.learning_rate = 0.2;
  double prev_mse = 1e300;
  for (int rounds = 1; rounds <= 40; rounds += 13) {
    GbtParams p = params;
    p.rounds = rounds;
    const GbtModel model = gbt_fit(x, y, p);
    const double mse = (gbt_predict(model, x) - y).squaredNorm();
    REQUIRE(mse <= prev_mse + 1e-9);
    prev_mse = mse;
  }
}

TEST_CASE("gbt predictions invariant under monotone feature transforms") {
  Rng rng(10);
  const Mat x = random_mat(150, 3, rng);
  Vec y(150);
  for (int i = 0; i < 150; ++i) y[i] = x(i, 0) * 2.0 - x(i, 1) + 0.2 * rng.normal();
  GbtParams params;
  params.rounds = 25;
  params.depth = 2;

  const GbtModel base = gbt_fit(x, y, params);
  Mat warped = x;
  warped.col(0) = x.col(0).array().exp();
  const GbtModel transformed = gbt_fit(warped, y, params);

  const Vec pred_base = gbt_predict(base, x);
  const Vec pred_transformed = gbt_predict(transformed, warped);
  REQUIRE((pred_base - pred_transformed).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("gbt validates parameters and data size") {
  Rng rng(11);
  const Mat x = random_mat(5, 2, rng);
  const Vec y = Vec::Zero(5);
  CHECK_THROWS_AS(gbt_fit(x, y, GbtParams{}), DataError);
  GbtParams bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("evaluate_representations covers the grid and scores perfectly separable data") {
  Rng rng(12);
  const int n_train = 200, n_test = 100;
  Mat train(n_train, 2), test(n_test, 2);
  std::vector<int> train_labels, test_labels;
  for (int i = 0; i < n_train; ++i) {
    const int cls = i % 2;
    train(i, 0) = rng.normal() + (cls == 0 ? 6.0 : -6.0);
    train(i, 1) = rng.normal();
    train_labels.push_back(cls);
  }
  for (int i = 0; i < n_test; ++i) {
    const int cls = i % 2;
    test(i, 0) = rng.normal() + (cls == 0 ? 6.0 : -6.0);
    test(i, 1) = rng.normal();
    test_labels.push_back(cls);
  }
  std::vector<RepresentationSet> reps;
  reps.push_back({"raw", train, test});
  reps.push_back({"scaled", 2.0 * train, 2.0 * test});
  std::vector<EvalTask> tasks;
  tasks.push_back({"binary", train_labels, test_labels, 2});
  const auto evals = evaluate_representations(reps, tasks, 5, 99);
  REQUIRE(evals.size() == 4);  // 2 reps x 2 classifiers x 1 task
  for (const auto& e : evals) {
    REQUIRE(e.weighted_f1 == doctest::Approx(1.0));
    REQUIRE(e.seed == 99);
    REQUIRE(e.confusion.rows() == 2);
  }
}

TEST_CASE("parallel_for respects TC_THREADS and keeps results identical") {
  std::vector<double> serial(400, 0.0), parallel(400, 0.0);
  auto body = [](std::size_t i) { return std::sqrt(static_cast<double>(i) + 1.0); };
  parallel_for(400, [&](std::size_t i) { serial[i] = body(i); });
  setenv("TC_THREADS", "2", 1);
  REQUIRE(thread_budget() >= 1);
  parallel_for(400, [&](std::size_t i) { parallel[i] = body(i); });
  unsetenv("TC_THREADS");
  REQUIRE(serial == parallel);

  // KNN predictions do not depend on the thread budget either.
  Rng rng(21);
  const Mat train = random_mat(300, 4, rng);
  std::vector<int> labels;
  for (int i = 0; i < 300; ++i) labels.push_back(i % 3);
  const Mat queries = random_mat(50, 4, rng);
  const auto base = knn_classify(train, labels, queries, 7);
  setenv("TC_THREADS", "2", 1);
  const auto threaded = knn_classify(train, labels, queries, 7);
  unsetenv("TC_THREADS");
  REQUIRE(base == threaded);
}
