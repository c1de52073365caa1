#include "tcemb/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tcemb/cohort.hpp"
#include "tcemb/csv.hpp"
#include "tcemb/error.hpp"
#include "tcemb/special.hpp"

namespace tcemb {

namespace {

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

TTestResult students_t(const std::vector<double>& sample_a, const std::vector<double>& sample_b) {
  const std::size_t n1 = sample_a.size();
  const std::size_t n2 = sample_b.size();
  if (n1 < 2 || n2 < 2) throw DataError("students_t: both samples need at least 2 values");

  TTestResult result;
  result.n_a = static_cast<long>(n1);
  result.n_b = static_cast<long>(n2);
  result.mean_a = mean_of(sample_a);
  result.mean_b = mean_of(sample_b);
  result.df = static_cast<double>(n1 + n2 - 2);

  double ss1 = 0.0, ss2 = 0.0;
  for (double x : sample_a) ss1 += (x - result.mean_a) * (x - result.mean_a);
  for (double x : sample_b) ss2 += (x - result.mean_b) * (x - result.mean_b);
  const double pooled_var = (ss1 + ss2) / result.df;

  if (pooled_var <= 0.0) {
    if (result.mean_a == result.mean_b) {
      result.t = 0.0;
      result.p = 1.0;
      return result;
    }
    throw NumericError("students_t: zero pooled variance with unequal means");
  }

  const double se = std::sqrt(pooled_var * (1.0 / static_cast<double>(n1) +
                                            1.0 / static_cast<double>(n2)));
  result.t = (result.mean_a - result.mean_b) / se;
  result.p = student_t_two_sided_p(result.t, result.df);
  return result;
}

BhOutcome benjamini_hochberg(const std::vector<double>& p_values, double q) {
  if (q <= 0.0 || q >= 1.0) throw ConfigError("benjamini_hochberg: q outside (0,1)");
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("benjamini_hochberg: p-value outside [0,1]");
  }
  const std::size_t m = p_values.size();
  BhOutcome outcome;
  outcome.q = q;
  outcome.order.resize(m);
  for (std::size_t i = 0; i < m; ++i) outcome.order[i] = i;
  std::stable_sort(outcome.order.begin(), outcome.order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

  // Step-up: largest k with p_(k) <= k q / m.
  std::size_t k = 0;
  for (std::size_t i = 1; i <= m; ++i) {
    if (p_values[outcome.order[i - 1]] <=
        static_cast<double>(i) * q / static_cast<double>(m)) {
      k = i;
    }
  }
  outcome.n_rejected = k;
  outcome.reject.assign(m, false);
  for (std::size_t i = 0; i < k; ++i) outcome.reject[outcome.order[i]] = true;

  // Adjusted p: running minimum of m p_(i) / i from the largest rank down.
  outcome.adjusted.assign(m, 1.0);
  double running = 1.0;
  for (std::size_t i = m; i >= 1; --i) {
    const double scaled =
        p_values[outcome.order[i - 1]] * static_cast<double>(m) / static_cast<double>(i);
    running = std::min(running, std::min(scaled, 1.0));
    outcome.adjusted[outcome.order[i - 1]] = running;
  }
  return outcome;
}

SignificanceReport lifestyle_significance_report(const CohortTable& table,
                                                 const LifestyleStrata& strata,
                                                 const std::vector<std::string>& markers,
                                                 double q) {
  if (table.age_group.empty()) {
    throw StateError("lifestyle_significance_report: assign age groups first");
  }
  if (strata.active.size() != static_cast<std::size_t>(table.n_rows())) {
    throw DimError("lifestyle_significance_report: strata not aligned with table");
  }

  int max_group = -1;
  for (int g : table.age_group) max_group = std::max(max_group, g);

  SignificanceReport report;
  // Families: one per sex x axis, spanning markers x age groups.
  for (const std::string axis : {"activity", "sleep"}) {
    const auto& flags = axis == std::string("activity") ? strata.active : strata.median_sleep;
    for (int sex_value : {0, 1}) {
      std::vector<TTestResult> family;
      std::map<std::string, std::pair<int, int>> tested_significant;  // marker -> (tested, significant)
      for (const auto& marker : markers) {
        const Index j = table.feature_index(marker);
        for (int g = 0; g <= max_group; ++g) {
          std::vector<double> in_stratum, out_stratum;
          for (Index i = 0; i < table.n_rows(); ++i) {
            const auto r = static_cast<std::size_t>(i);
            if (table.sex[r] != sex_value || table.age_group[r] != g) continue;
            (flags[r] ? in_stratum : out_stratum).push_back(table.features(i, j));
          }
          if (in_stratum.size() < 2 || out_stratum.size() < 2) {
            report.skipped.push_back(marker + "|sex=" + std::to_string(sex_value) +
                                     "|group=" + std::to_string(g) + "|" + axis);
            continue;
          }
          TTestResult test = students_t(in_stratum, out_stratum);
          test.feature = marker;
          test.sex = sex_value;
          test.age_group = g;
          test.axis = axis;
          family.push_back(std::move(test));
        }
      }
      std::vector<double> pvals;
      pvals.reserve(family.size());
      for (const auto& t : family) pvals.push_back(t.p);
      if (!pvals.empty()) {
        const BhOutcome bh = benjamini_hochberg(pvals, q);
        for (std::size_t i = 0; i < family.size(); ++i) {
          family[i].p_adjusted = bh.adjusted[i];
          family[i].significant = bh.reject[i];
          auto& counts = tested_significant[family[i].feature];
          counts.first += 1;
          if (family[i].significant) counts.second += 1;
        }
      }
      SignificanceReport::Summary summary;
      summary.axis = axis;
      summary.sex = sex_value;
      summary.n_markers = static_cast<int>(markers.size());
      for (const auto& [marker, counts] : tested_significant) {
        if (counts.second >= 1) summary.significant_in_any_group += 1;
        if (counts.first > 0 && 2 * counts.second >= counts.first) {
          summary.significant_in_half_groups += 1;
        }
      }
      report.summaries.push_back(summary);
      for (auto& t : family) report.tests.push_back(std::move(t));
    }
  }
  return report;
}

void write_significance_csv(const std::string& path, const SignificanceReport& report,
                            const AgeGroups& groups) {
  std::string out =
      "marker,sex,age_group,axis,n_a,n_b,mean_a,mean_b,t,df,p,p_adjusted,significant\n";
  for (const auto& t : report.tests) {
    out += t.feature + "," + std::to_string(t.sex) + "," + groups.label(t.age_group) + "," +
           t.axis + "," + std::to_string(t.n_a) + "," + std::to_string(t.n_b) + "," +
           format_cell(t.mean_a) + "," + format_cell(t.mean_b) + "," + format_cell(t.t) + "," +
           format_cell(t.df) + "," + format_cell(t.p) + "," + format_cell(t.p_adjusted) + "," +
           (t.significant ? "1" : "0") + "\n";
  }
  write_lines(path, out);
}

}  // namespace tcemb
