#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tcemb/cohort.hpp"
#include "tcemb/csv.hpp"
#include "tcemb/error.hpp"
#include "tcemb/preprocess.hpp"
#include "tcemb/stats.hpp"
#include "tcemb/synthcohort.hpp"

using namespace tcemb;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Test-local least squares R^2 of y on columns X (intercept included).
double ols_r2(const Mat& x_cols, const Vec& y) {
  Mat design(x_cols.rows(), x_cols.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x_cols.cols()) = x_cols;
  const Vec coef = (design.transpose() * design).ldlt().solve(design.transpose() * y);
  const Vec resid = y - design * coef;
  const double ss_res = resid.squaredNorm();
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace

TEST_CASE("generator is deterministic to the byte") {
  GeneratorSpec spec = default_generator_spec(33);
  spec.participants = 400;
  auto a = generate_cohort(spec);
  auto b = generate_cohort(spec);
  const std::string pa = temp_path("tcemb_gen_a.csv");
  const std::string pb = temp_path("tcemb_gen_b.csv");
  save_cohort(pa, a.table);
  save_cohort(pb, b.table);
  REQUIRE(file_bytes(pa) == file_bytes(pb));

  const CohortTable fa = generate_followup(spec, a.table, a.truth);
  const CohortTable fb = generate_followup(spec, b.table, b.truth);
  save_cohort(pa, fa);
  save_cohort(pb, fb);
  REQUIRE(file_bytes(pa) == file_bytes(pb));

  // A different seed changes the data.
  GeneratorSpec other = spec;
  other.seed = 34;
  auto c = generate_cohort(other);
  save_cohort(pb, c.table);
  REQUIRE(file_bytes(pa) != file_bytes(pb));
}

TEST_CASE("zero covariance collapses classes onto their means") {
  GeneratorSpec spec = default_generator_spec(7);
  spec.participants = 300;
  spec.missingness = 0.0;
  spec.lowrank_rank = 0;
  spec.visit1_effects.clear();
  for (auto& c : spec.classes) c.sd_scale = 0.0;
  const auto gen = generate_cohort(spec);
  // All members of one class have identical biomarker rows.
  std::map<std::string, Index> first_row;
  for (Index i = 0; i < gen.table.n_rows(); ++i) {
    const std::string& cls = gen.truth.true_class[static_cast<std::size_t>(i)];
    const auto it = first_row.find(cls);
    if (it == first_row.end()) {
      first_row[cls] = i;
      continue;
    }
    for (int j = 0; j < spec.n_biomarkers; ++j) {
      REQUIRE(gen.table.features(i, j) == gen.table.features(it->second, j));
    }
  }
}

TEST_CASE("lifestyle shifts move only the affected markers under zero noise") {
  GeneratorSpec spec = default_generator_spec(8);
  spec.participants = 400;
  spec.missingness = 0.0;
  spec.lowrank_rank = 0;
  for (auto& c : spec.classes) c.sd_scale = 0.0;
  spec.visit1_effects = {{"activity", {4}, 1.5}};
  const auto gen = generate_cohort(spec);
  for (Index i = 0; i < gen.table.n_rows(); ++i) {
    const auto r = static_cast<std::size_t>(i);
    if (gen.truth.true_class[r] != "healthy_core") continue;
    const double expected = gen.truth.true_active[r] ? 1.5 : 0.0;
    REQUIRE(gen.table.features(i, 4) == doctest::Approx(expected).epsilon(1e-12));
    REQUIRE(gen.table.features(i, 5) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("well-separated two-class spec is recovered by nearest neighbor") {
  GeneratorSpec spec;
  spec.seed = 9;
  spec.participants = 600;
  spec.n_biomarkers = 6;
  spec.lowrank_rank = 0;
  spec.missingness = 0.0;
  GeneratorSpec::ClassDef a, b;
  a.name = "left";
  a.emitted_code = "cardio";
  a.prevalence = 0.5;
  a.sd_scale = 1.0;
  a.mean_offsets = {{0, -4.0}};
  b.name = "right";
  b.emitted_code = "diabetes";
  b.prevalence = 0.5;
  b.sd_scale = 1.0;
  b.mean_offsets = {{0, 4.0}};
  spec.classes = {a, b};
  const auto gen = generate_cohort(spec);

  // Leave-one-out 1-NN on the biomarkers.
  const Index n = gen.table.n_rows();
  int correct = 0;
  for (Index i = 0; i < n; ++i) {
    double best = 1e300;
    Index best_j = -1;
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double d = (gen.table.features.row(i).head(6) -
                        gen.table.features.row(j).head(6)).squaredNorm();
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    if (gen.truth.true_class[static_cast<std::size_t>(i)] ==
        gen.truth.true_class[static_cast<std::size_t>(best_j)]) {
      ++correct;
    }
  }
  REQUIRE(static_cast<double>(correct) / static_cast<double>(n) >= 0.99);
}

TEST_CASE("class-conditional means converge to the configured class means") {
  GeneratorSpec spec = default_generator_spec(10);
  spec.participants = 6000;
  spec.missingness = 0.0;
  spec.lowrank_rank = 0;
  spec.visit1_effects.clear();
  const auto gen = generate_cohort(spec);
  // diabetes_cardio inherits both parents' offsets: bm00..bm03.
  std::vector<double> sums(4, 0.0);
  long count = 0;
  for (Index i = 0; i < gen.table.n_rows(); ++i) {
    if (gen.truth.true_class[static_cast<std::size_t>(i)] != "diabetes_cardio") continue;
    ++count;
    for (int j = 0; j < 4; ++j) sums[static_cast<std::size_t>(j)] += gen.table.features(i, j);
  }
  REQUIRE(count > 100);
  const double tol = 4.0 / std::sqrt(static_cast<double>(count));
  const std::vector<double> expected = {2.6, 2.0, 2.6, 2.0};
  for (int j = 0; j < 4; ++j) {
    REQUIRE(std::abs(sums[static_cast<std::size_t>(j)] / static_cast<double>(count) -
                     expected[static_cast<std::size_t>(j)]) <= tol);
  }
}

TEST_CASE("missingness inserts nulls at the configured row rate") {
  GeneratorSpec spec = default_generator_spec(11);
  spec.participants = 3000;
  const auto gen = generate_cohort(spec);
  long rows_with_null = 0;
  for (Index i = 0; i < gen.table.n_rows(); ++i) {
    for (Index j = 0; j < gen.table.n_features(); ++j) {
      if (std::isnan(gen.table.features(i, j))) {
        ++rows_with_null;
        break;
      }
    }
  }
  const double rate = static_cast<double>(rows_with_null) / 3000.0;
  REQUIRE(rate > 0.03);
  REQUIRE(rate < 0.07);

  GeneratorSpec clean = spec;
  clean.missingness = 0.0;
  REQUIRE(generate_cohort(clean).table.null_count() == 0);
}

TEST_CASE("identity follow-up reproduces visit one") {
  GeneratorSpec spec = default_generator_spec(12);
  spec.participants = 300;
  spec.missingness = 0.0;
  spec.followup_alpha = 1.0;
  spec.followup_gamma = 0.0;
  spec.followup_noise_sd = 0.0;
  spec.followup_effects.clear();
  spec.followup_fraction = 1.0;
  auto gen = generate_cohort(spec);
  const CohortTable followup = generate_followup(spec, gen.table, gen.truth);
  REQUIRE(followup.n_rows() == gen.table.n_rows());
  for (Index i = 0; i < followup.n_rows(); ++i) {
    REQUIRE(followup.elapsed_years[static_cast<std::size_t>(i)] >= 2.0);
    REQUIRE(followup.elapsed_years[static_cast<std::size_t>(i)] <= 5.0);
    for (int j = 0; j < spec.n_biomarkers; ++j) {
      REQUIRE(followup.features(i, j) == doctest::Approx(gen.table.features(i, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("noiseless follow-up is exactly explained by the generative formula") {
  GeneratorSpec spec = default_generator_spec(13);
  spec.participants = 500;
  spec.missingness = 0.0;
  spec.followup_noise_sd = 0.0;
  spec.followup_fraction = 1.0;
  auto gen = generate_cohort(spec);
  const CohortTable followup = generate_followup(spec, gen.table, gen.truth);
  const int marker = default_marker_of_interest();

  // Regress b2 on (b1, active): the fit must be perfect.
  Mat x(followup.n_rows(), 2);
  Vec y(followup.n_rows());
  for (Index i = 0; i < followup.n_rows(); ++i) {
    x(i, 0) = gen.table.features(i, marker);
    x(i, 1) = gen.truth.true_active[static_cast<std::size_t>(i)];
    y[i] = followup.features(i, marker);
  }
  REQUIRE(ols_r2(x, y) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lifestyle term raises population r2 by the analytic amount") {
  GeneratorSpec spec = default_generator_spec(14);
  spec.participants = 5000;
  spec.missingness = 0.0;
  spec.followup_fraction = 1.0;
  auto gen = generate_cohort(spec);
  const CohortTable followup = generate_followup(spec, gen.table, gen.truth);
  const int marker = default_marker_of_interest();

  Mat x1(followup.n_rows(), 1);
  Mat x2(followup.n_rows(), 2);
  Vec y(followup.n_rows());
  for (Index i = 0; i < followup.n_rows(); ++i) {
    const double b1 = gen.table.features(i, marker);
    x1(i, 0) = b1;
    x2(i, 0) = b1;
    x2(i, 1) = gen.truth.true_active[static_cast<std::size_t>(i)];
    y[i] = followup.features(i, marker);
  }
  const double delta = ols_r2(x2, y) - ols_r2(x1, y);
  const double expected = analytic_followup_delta_r2(spec, marker);
  REQUIRE(expected == doctest::Approx(0.10).epsilon(1e-9));
  REQUIRE(delta > expected * 0.8);
  REQUIRE(delta < expected * 1.2);
}

TEST_CASE("ground truth sidecar lists ids, classes and noiseless values") {
  GeneratorSpec spec = default_generator_spec(15);
  spec.participants = 50;
  auto gen = generate_cohort(spec);
  generate_followup(spec, gen.table, gen.truth);
  const std::string path = temp_path("tcemb_truth.csv");
  save_ground_truth(path, gen.table, gen.truth, spec.biomarker_names());
  const CsvFile file = read_csv(path);
  REQUIRE(file.header.size() == 2 + static_cast<std::size_t>(spec.n_biomarkers));
  REQUIRE(file.header[0] == "id");
  REQUIRE(file.header[1] == "true_class");
  REQUIRE(file.rows.size() == 50);
}

TEST_CASE("generator spec validation") {
  GeneratorSpec spec = default_generator_spec(16);
  spec.classes[0].prevalence += 0.2;
  CHECK_THROWS_AS(generate_cohort(spec), ConfigError);

  GeneratorSpec bad_missing = default_generator_spec(16);
  bad_missing.missingness = 0.9;
  CHECK_THROWS_AS(bad_missing.validate(), ConfigError);

  GeneratorSpec bad_parent = default_generator_spec(16);
  bad_parent.classes[2].parents.push_back("no_such_class");
  CHECK_THROWS_AS(bad_parent.validate(), ConfigError);
}

TEST_CASE("planted default effects are recovered across twenty replicates") {
  // The default effect map must be reliably recoverable: each affected
  // marker flags on its axis in at least 90% of replicates, while
  // families stay inside the BH false-rejection envelope on the
  // unaffected markers.
  std::map<std::string, int> marker_hits;  // affected marker -> replicates flagged
  long total_rejections = 0, false_rejections = 0;
  const int replicates = 20;
  for (std::uint64_t seed = 100; seed < 100 + replicates; ++seed) {
    GeneratorSpec spec = default_generator_spec(seed);
    spec.missingness = 0.0;
    auto gen = generate_cohort(spec);
    assign_age_groups(gen.table, AgeGroups::defaults());
    const auto strata = stratify_lifestyle(gen.table, LifestyleColumns{});
    const auto report =
        lifestyle_significance_report(gen.table, strata, spec.biomarker_names(), 0.05);

    std::set<std::string> activity_affected, sleep_affected;
    for (const auto& effect : spec.visit1_effects) {
      for (int j : effect.biomarkers) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "bm%02d", j);
        (effect.axis == "activity" ? activity_affected : sleep_affected).insert(buf);
      }
    }
    std::set<std::string> flagged_activity, flagged_sleep;
    for (const auto& t : report.tests) {
      if (!t.significant) continue;
      auto& flagged = t.axis == "activity" ? flagged_activity : flagged_sleep;
      const auto& affected = t.axis == "activity" ? activity_affected : sleep_affected;
      flagged.insert(t.feature);
      ++total_rejections;
      if (affected.count(t.feature) == 0) ++false_rejections;
    }
    for (const auto& m : activity_affected) {
      if (flagged_activity.count(m) > 0) marker_hits[m] += 1;
    }
    for (const auto& m : sleep_affected) {
      if (flagged_sleep.count(m) > 0) marker_hits[m] += 1;
    }
  }
  REQUIRE(marker_hits.size() == 5);
  for (const auto& [marker, hits] : marker_hits) {
    CAPTURE(marker);
    REQUIRE(hits >= 18);  // per-marker power >= 0.9
  }
  // BH controls the expected false fraction of discoveries at q; the
  // aggregate over 20 replicates concentrates near or below it.
  REQUIRE(total_rejections > 0);
  const double false_fraction =
      static_cast<double>(false_rejections) / static_cast<double>(total_rejections);
  REQUIRE(false_fraction <= 0.08);
}
