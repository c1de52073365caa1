#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tcemb/cohort.hpp"
#include "tcemb/preprocess.hpp"

namespace tcemb {

/// Declarative description of a synthetic cohort with known ground
/// truth: Gaussian condition clusters with comorbidity structure,
/// lifestyle variables with planted biomarker effects, and a follow-up
/// process where lifestyle genuinely shifts future values.
struct GeneratorSpec {
  struct ClassDef {
    std::string name;                      // condition code, or kRawHealthyCode carriers below
    std::string emitted_code;              // what the csv column shows ("none" for healthy)
    double prevalence = 0.0;
    double sd_scale = 1.0;                 // per-class diagonal sd multiplier
    std::map<int, double> mean_offsets;    // biomarker index -> own offset
    std::vector<std::string> parents;      // comorbidity links: parents' offsets are summed in
  };

  struct LifestyleEffect {
    std::string axis;            // "activity" or "sleep"
    std::vector<int> biomarkers; // affected biomarker indices
    double effect = 0.0;         // additive shift for the in-stratum group
  };

  long participants = 5000;
  int n_biomarkers = 30;
  std::vector<ClassDef> classes;
  std::vector<LifestyleEffect> visit1_effects;
  std::vector<LifestyleEffect> followup_effects;

  // Shared low-rank correlation component across biomarkers.
  int lowrank_rank = 3;
  double lowrank_scale = 1.2;
  std::vector<int> lowrank_free;  // biomarkers kept free of the shared component

  // Lifestyle variable distributions (clipped at zero where noted).
  double moderate_mean = 150.0, moderate_sd = 70.0;
  double vigorous_mean = 45.0, vigorous_sd = 35.0;
  double sleep_mean = 7.1, sleep_sd = 1.1;
  double steps_mean = 7.0, steps_sd = 2.5;
  double sleep_reference = 7.1;  // true median-sleep threshold for planting

  // Follow-up process b2 = alpha b1 + (lifestyle effects) + gamma drift + noise.
  double followup_alpha = 0.8;
  double followup_gamma = 0.3;
  double followup_noise_sd = 0.45;
  double followup_fraction = 0.15;
  std::map<int, double> class_drift;  // biomarker index -> drift applied per offset unit

  // Fraction of rows given 1-3 null feature cells.
  double missingness = 0.05;

  // Fraction of diagnosed rows whose emitted condition code is swapped
  // for another disease code (miscoded records). Ground truth keeps the
  // real class.
  double label_noise = 0.0;

  // Reference ranges emitted for the bona-fide split, in units of the
  // healthy-core marginal sd around zero.
  double range_sd_multiplier = 2.8;

  std::uint64_t seed = 1;

  void validate() const;
  std::vector<std::string> biomarker_names() const;
  std::vector<std::string> lifestyle_names() const;
};

/// Per-row ground truth emitted alongside the cohort.
struct GroundTruth {
  std::vector<std::string> true_class;
  std::vector<int> class_index;
  std::vector<std::uint8_t> true_active;
  std::vector<std::uint8_t> true_median_sleep;
  Mat visit1_complete;     // biomarkers before nulls were inserted
  Mat noiseless_followup;  // rows x biomarkers, filled by generate_followup
};

struct GeneratedCohort {
  CohortTable table;        // visit 1, with nulls inserted
  GroundTruth truth;
  ReferenceRanges ranges;
};

/// Desk-scale default: 12 classes mirroring the condition vocabulary,
/// planted activity/sleep effects, and a follow-up lifestyle effect on
/// the designated marker of interest sized analytically so that adding
/// the lifestyle signal raises the population R-squared by
/// `target_delta_r2`.
GeneratorSpec default_generator_spec(std::uint64_t seed, double target_delta_r2 = 0.10);

/// Index of the marker the default spec plants the follow-up lifestyle
/// effect on (kept free of class offsets and the shared component).
int default_marker_of_interest();

/// Analytic R-squared gain of adding the follow-up activity effect to a
/// regression on (b_t) alone, for a biomarker with no visit-1 lifestyle
/// effect. Used to size the default effect and as a test oracle.
double analytic_followup_delta_r2(const GeneratorSpec& spec, int biomarker);

double analytic_active_probability(const GeneratorSpec& spec);

GeneratedCohort generate_cohort(const GeneratorSpec& spec);

/// Visit-2 table for a seeded subset of participants, elapsed 2-5
/// years. Biomarkers follow the generator's follow-up process; lifestyle
/// columns are carried over from visit 1.
CohortTable generate_followup(const GeneratorSpec& spec, const CohortTable& visit1,
                              GroundTruth& truth);

void save_ground_truth(const std::string& path, const CohortTable& visit1,
                       const GroundTruth& truth, const std::vector<std::string>& biomarkers);

}  // namespace tcemb
