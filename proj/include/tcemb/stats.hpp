#pragma once

#include <string>
#include <vector>

#include "tcemb/types.hpp"

namespace tcemb {

struct CohortTable;
struct LifestyleStrata;
struct AgeGroups;

/// Result of one pooled-variance two-sample t-test.
struct TTestResult {
  std::string feature;
  int sex = -1;
  int age_group = -1;
  std::string axis;  // "activity" or "sleep"
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  long n_a = 0;
  long n_b = 0;
  double p_adjusted = 1.0;
  bool significant = false;
};

/// Student's t-test (pooled variance, two-sided p). Both samples need at
/// least two values. Zero pooled variance with equal means gives t = 0,
/// p = 1; with unequal means it is a degenerate-variance error.
TTestResult students_t(const std::vector<double>& sample_a, const std::vector<double>& sample_b);

/// Benjamini-Hochberg step-up outcome over one family of p-values.
struct BhOutcome {
  std::vector<std::size_t> order;     // indices sorted by ascending p (stable)
  std::vector<bool> reject;           // per original index
  std::vector<double> adjusted;       // per original index
  double q = 0.05;
  std::size_t n_rejected = 0;
};

BhOutcome benjamini_hochberg(const std::vector<double>& p_values, double q);

/// One t-test per (marker, sex, age group) comparing the two strata of
/// each lifestyle axis, BH-corrected within one family per sex x axis.
struct SignificanceReport {
  std::vector<TTestResult> tests;                  // ordered by (axis, sex, marker, age group)
  std::vector<std::string> skipped;                // cells with too little data
  // marker -> number of age groups where it was significant, per sex/axis
  struct Summary {
    std::string axis;
    int sex = -1;
    int n_markers = 0;
    int significant_in_any_group = 0;
    int significant_in_half_groups = 0;
  };
  std::vector<Summary> summaries;
};

SignificanceReport lifestyle_significance_report(const CohortTable& table,
                                                 const LifestyleStrata& strata,
                                                 const std::vector<std::string>& markers,
                                                 double q);

void write_significance_csv(const std::string& path, const SignificanceReport& report,
                            const AgeGroups& groups);

}  // namespace tcemb
