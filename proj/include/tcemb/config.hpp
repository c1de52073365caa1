#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcemb/gbt.hpp"
#include "tcemb/metric_loss.hpp"
#include "tcemb/trainer.hpp"

namespace tcemb {

/// Effective configuration of one run. Parsed from a flat sectioned
/// key=value file; every key has a default, unknown keys are errors.
/// One global seed fans out to the stages via derive_seed.
struct RunConfig {
  std::uint64_t seed = 1;

  struct Paths {
    std::string out_dir = "out";
    std::string cohort;        // default <out>/cohort.csv
    std::string followup;      // default <out>/followup.csv
    std::string ranges;        // default <out>/ranges.csv
    std::string ground_truth;  // default <out>/ground_truth.csv
  } paths;

  struct Gen {
    long participants = 5000;
    double missingness = 0.05;
    double followup_fraction = 0.15;
    double target_delta_r2 = 0.10;
    double label_noise = 0.08;
    bool zero_lifestyle_effects = false;
  } gen;

  struct Prep {
    double completeness_threshold = 0.75;
    double train_frac = 0.70;
    double val_frac = 0.10;
    long triplets = 12000;
  } prep;

  struct Train {
    LossKind loss = LossKind::kProposed;
    double margin = 1.0;
    int dim = 32;
    int hidden1 = 64;
    int hidden2 = 32;
    double dropout = 0.1;
    double lr = 1e-3;
    double decay = 0.95;
    int decay_interval = 50;
    int decay_start = 500;
    int epochs = 160;
    int batch = 256;
    bool per_sex = true;
    long val_triplets = 5000;
  } train;

  struct Stats {
    double q = 0.05;
  } stats;

  struct Eval {
    int knn_k = 10;
    int pca_dim = 0;  // 0: use the embedding width
  } eval;

  struct Predict {
    std::vector<std::string> markers;  // empty: the designated marker of interest
    int folds = 5;
    bool healthy_only = true;
    bool include_elapsed = false;
    long min_participants = 50;
    GbtParams gbt;
  } predict;

  /// Paths left empty resolve relative to out_dir.
  void resolve_paths();

  TrainConfig train_config(std::uint64_t stage_seed) const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Serialized effective values, used for the manifest snapshot.
std::string run_config_to_json(const RunConfig& config);

}  // namespace tcemb
