#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "support/oracles.hpp"
#include "tcemb/cohort.hpp"
#include "tcemb/error.hpp"
#include "tcemb/preprocess.hpp"
#include "tcemb/rng.hpp"
#include "tcemb/special.hpp"
#include "tcemb/stats.hpp"
#include "tcemb/synthcohort.hpp"

using namespace tcemb;

TEST_CASE("incomplete beta against closed forms") {
  // For df = 2 the two-sided t tail has the closed form 1 - t/sqrt(t^2+2).
  for (double t : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double expected = 1.0 - t / std::sqrt(t * t + 2.0);
    REQUIRE(student_t_two_sided_p(t, 2.0) == doctest::Approx(expected).epsilon(1e-10));
  }
  // df = 1: p = 1 - (2/pi) atan(t).
  for (double t : {0.25, 1.0, 3.0}) {
    const double expected = 1.0 - 2.0 / M_PI * std::atan(t);
    REQUIRE(student_t_two_sided_p(t, 1.0) == doctest::Approx(expected).epsilon(1e-10));
  }
  REQUIRE(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  REQUIRE(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-8, 1e-4, 0.02, 1.0 / 6.0, 0.5, 0.75, 0.999, 1.0 - 1e-8}) {
    const double x = normal_quantile(p);
    REQUIRE(normal_cdf(x) == doctest::Approx(p).epsilon(1e-9));
  }
  REQUIRE(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  REQUIRE(normal_quantile(1.0 / 6.0) == doctest::Approx(-0.9674215661).epsilon(1e-8));
}

TEST_CASE("students_t identical samples") {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  const auto r = students_t(a, a);
  REQUIRE(r.t == 0.0);
  REQUIRE(r.p == doctest::Approx(1.0));
}

TEST_CASE("students_t strong separation") {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  const std::vector<double> b = {1001.0, 1002.0, 1003.0};
  const auto r = students_t(a, b);
  REQUIRE(std::abs(r.t) > 100.0);
  REQUIRE(r.p < 1e-6);
}

TEST_CASE("students_t matches the textbook formula") {
  const std::vector<double> a = {2.1, 2.5, 2.3, 2.2};
  const std::vector<double> b = {2.9, 3.1, 3.0, 2.8};
  const auto r = students_t(a, b);

  // Independent computation, spelled out.
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double ma = mean(a), mb = mean(b);
  double ssa = 0.0, ssb = 0.0;
  for (double x : a) ssa += (x - ma) * (x - ma);
  for (double x : b) ssb += (x - mb) * (x - mb);
  const double df = static_cast<double>(a.size() + b.size() - 2);
  const double sp2 = (ssa + ssb) / df;
  const double t_expected =
      (ma - mb) / std::sqrt(sp2 * (1.0 / static_cast<double>(a.size()) +
                                   1.0 / static_cast<double>(b.size())));
  REQUIRE(r.t == doctest::Approx(t_expected).epsilon(1e-10));
  REQUIRE(r.df == doctest::Approx(df));
}

TEST_CASE("students_t is antisymmetric in sample order") {
  Rng rng(1);
  std::vector<double> a, b;
  for (int i = 0; i < 12; ++i) a.push_back(rng.normal());
  for (int i = 0; i < 9; ++i) b.push_back(0.4 + rng.normal());
  const auto r1 = students_t(a, b);
  const auto r2 = students_t(b, a);
  REQUIRE(r1.t == doctest::Approx(-r2.t).epsilon(1e-12));
  REQUIRE(r1.p == doctest::Approx(r2.p).epsilon(1e-12));
}

TEST_CASE("students_t degenerate variance") {
  const std::vector<double> a = {2.0, 2.0, 2.0};
  const std::vector<double> b = {5.0, 5.0};
  CHECK_THROWS_AS(students_t(a, b), NumericError);
  CHECK_THROWS_AS(students_t({1.0}, {2.0, 3.0}), DataError);
}

TEST_CASE("p-values uniform under the null") {
  Rng rng(2);
  std::vector<double> pvals;
  for (int rep = 0; rep < 5000; ++rep) {
    std::vector<double> a, b;
    for (int i = 0; i < 10; ++i) a.push_back(rng.normal());
    for (int i = 0; i < 10; ++i) b.push_back(rng.normal());
    pvals.push_back(students_t(a, b).p);
  }
  std::sort(pvals.begin(), pvals.end());
  double ks = 0.0;
  const auto n = static_cast<double>(pvals.size());
  for (std::size_t i = 0; i < pvals.size(); ++i) {
    const double empirical_hi = static_cast<double>(i + 1) / n;
    const double empirical_lo = static_cast<double>(i) / n;
    ks = std::max(ks, std::max(std::abs(empirical_hi - pvals[i]),
                               std::abs(pvals[i] - empirical_lo)));
  }
  REQUIRE(ks < 0.05);
}

TEST_CASE("benjamini_hochberg worked example") {
  const std::vector<double> p = {0.01, 0.04, 0.03, 0.20};
  const auto out = benjamini_hochberg(p, 0.05);
  REQUIRE(out.n_rejected == 1);
  REQUIRE(out.reject[0]);
  REQUIRE_FALSE(out.reject[1]);
  REQUIRE_FALSE(out.reject[2]);
  REQUIRE_FALSE(out.reject[3]);
}

TEST_CASE("benjamini_hochberg all ones rejects nothing") {
  const auto out = benjamini_hochberg({1.0, 1.0, 1.0}, 0.05);
  REQUIRE(out.n_rejected == 0);
}

TEST_CASE("benjamini_hochberg equals brute-force oracle on random grids") {
  Rng rng(3);
  for (int rep = 0; rep < 2000; ++rep) {
    const std::size_t m = 1 + rng.below(10);
    std::vector<double> p(m);
    for (auto& v : p) v = 0.005 * static_cast<double>(rng.below(201));
    const auto fast = benjamini_hochberg(p, 0.05);
    const auto slow = oracle::bh_reject_bruteforce(p, 0.05);
    for (std::size_t i = 0; i < m; ++i) REQUIRE(fast.reject[i] == slow[i]);
  }
}

TEST_CASE("benjamini_hochberg rejection set is a sorted prefix and adjusted p monotone") {
  Rng rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t m = 2 + rng.below(12);
    std::vector<double> p(m);
    for (auto& v : p) v = rng.uniform();
    const auto out = benjamini_hochberg(p, 0.05);
    bool seen_nonrejected = false;
    double prev_adj = 0.0;
    for (std::size_t rank = 0; rank < m; ++rank) {
      const std::size_t idx = out.order[rank];
      if (!out.reject[idx]) seen_nonrejected = true;
      if (seen_nonrejected) REQUIRE_FALSE(out.reject[idx]);
      REQUIRE(out.adjusted[idx] >= prev_adj - 1e-15);
      prev_adj = out.adjusted[idx];
      REQUIRE(out.adjusted[idx] >= 0.0);
      REQUIRE(out.adjusted[idx] <= 1.0);
    }
  }
}

TEST_CASE("benjamini_hochberg adding a smaller p keeps rejections") {
  Rng rng(5);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t m = 2 + rng.below(8);
    std::vector<double> p(m);
    for (auto& v : p) v = rng.uniform();
    const auto base = benjamini_hochberg(p, 0.05);
    std::vector<double> extended = p;
    extended.push_back(0.0);  // always rejection-worthy
    const auto grown = benjamini_hochberg(extended, 0.05);
    for (std::size_t i = 0; i < m; ++i) {
      if (base.reject[i]) REQUIRE(grown.reject[i]);
    }
  }
}

namespace {

// Cohort with a planted activity effect on selected markers; effect 0
// gives the null.
GeneratedCohort lifestyle_fixture(std::uint64_t seed, double effect,
                                  const std::vector<int>& markers, long participants) {
  GeneratorSpec spec = default_generator_spec(seed);
  spec.participants = participants;
  spec.missingness = 0.0;
  spec.visit1_effects.clear();
  if (effect != 0.0) spec.visit1_effects.push_back({"activity", markers, effect});
  return generate_cohort(spec);
}

}  // namespace

TEST_CASE("significance report on a single marker and group") {
  GeneratorSpec spec = default_generator_spec(11);
  spec.participants = 300;
  spec.missingness = 0.0;
  spec.visit1_effects.clear();
  auto gen = generate_cohort(spec);
  assign_age_groups(gen.table, AgeGroups::defaults());
  const auto strata = stratify_lifestyle(gen.table, LifestyleColumns{});
  const auto report = lifestyle_significance_report(gen.table, strata, {"bm00"}, 0.05);
  // One marker, both sexes, both axes, six age groups max.
  REQUIRE(report.tests.size() + report.skipped.size() == 2 * 2 * 6);
  for (const auto& t : report.tests) REQUIRE(t.feature == "bm00");
}

TEST_CASE("planted activity effect is detected in at least half the groups") {
  // Planted on the markers free of the shared component so the
  // standardized effect size is stable across seeds.
  const std::vector<int> affected = {20, 21};
  auto gen = lifestyle_fixture(21, 1.2, affected, 4000);
  assign_age_groups(gen.table, AgeGroups::defaults());
  const auto strata = stratify_lifestyle(gen.table, LifestyleColumns{});
  std::vector<std::string> markers;
  for (const auto& name : gen.table.feature_names) {
    if (name.rfind("bm", 0) == 0) markers.push_back(name);
  }
  const auto report = lifestyle_significance_report(gen.table, strata, markers, 0.05);
  for (const std::string target : {"bm20", "bm21"}) {
    for (int sex : {0, 1}) {
      int tested = 0, significant = 0;
      for (const auto& t : report.tests) {
        if (t.axis != "activity" || t.sex != sex || t.feature != target) continue;
        ++tested;
        if (t.significant) ++significant;
      }
      REQUIRE(tested > 0);
      REQUIRE(2 * significant >= tested);
    }
  }
}

TEST_CASE("null cohort stays near the nominal false-rejection rate") {
  // Aggregated over seeds, the per-family any-rejection rate under the
  // full null is at most q (Simes), so the count is stochastically
  // dominated by Binomial(n_families, q).
  int families = 0;
  int families_with_rejections = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto gen = lifestyle_fixture(seed, 0.0, {}, 1500);
    assign_age_groups(gen.table, AgeGroups::defaults());
    const auto strata = stratify_lifestyle(gen.table, LifestyleColumns{});
    std::vector<std::string> markers;
    for (const auto& name : gen.table.feature_names) {
      if (name.rfind("bm", 0) == 0) markers.push_back(name);
    }
    const auto report = lifestyle_significance_report(gen.table, strata, markers, 0.05);
    bool any[2][2] = {{false, false}, {false, false}};
    for (const auto& t : report.tests) {
      if (t.significant) any[t.sex][t.axis == "sleep" ? 1 : 0] = true;
    }
    for (int s = 0; s < 2; ++s) {
      for (int a = 0; a < 2; ++a) {
        ++families;
        if (any[s][a]) ++families_with_rejections;
      }
    }
  }
  REQUIRE(families == 40);
  // 99.5th percentile of Binomial(40, 0.05) is 7.
  REQUIRE(families_with_rejections <= 7);
}

TEST_CASE("single marker and single cell produce one test per axis") {
  CohortTable t;
  t.feature_names = {"bm00", "act_moderate_min", "act_vigorous_min", "sleep_hours"};
  const int n = 40;
  t.features.resize(n, 4);
  Rng rng(77);
  for (Index i = 0; i < n; ++i) {
    t.ids.push_back("q" + std::to_string(i));
    t.sex.push_back(0);
    t.age.push_back(50.0);
    t.visit_index.push_back(1);
    t.elapsed_years.push_back(std::nan(""));
    t.condition.push_back(kRawHealthyCode);
    t.features(i, 0) = rng.normal();
    t.features(i, 1) = i % 2 == 0 ? 200.0 : 10.0;  // half active
    t.features(i, 2) = 0.0;
    t.features(i, 3) = 6.0 + (i % 3);
  }
  assign_age_groups(t, AgeGroups::defaults());
  const auto strata = stratify_lifestyle(t, LifestyleColumns{});
  const auto report = lifestyle_significance_report(t, strata, {"bm00"}, 0.05);
  int activity_rows = 0, sleep_rows = 0;
  for (const auto& test : report.tests) {
    (test.axis == "activity" ? activity_rows : sleep_rows) += 1;
  }
  REQUIRE(activity_rows == 1);
  REQUIRE(sleep_rows == 1);
}
