#include "tcemb/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "tcemb/checkpoint.hpp"
#include "tcemb/classify.hpp"
#include "tcemb/csv.hpp"
#include "tcemb/error.hpp"
#include "tcemb/pca.hpp"
#include "tcemb/predict.hpp"
#include "tcemb/preprocess.hpp"
#include "tcemb/stats.hpp"
#include "tcemb/synthcohort.hpp"
#include "tcemb/trainer.hpp"

namespace tcemb {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void ensure_out_dir(const RunConfig& config) {
  std::filesystem::create_directories(config.paths.out_dir);
}

std::string out_path(const RunConfig& config, const std::string& name) {
  return config.paths.out_dir + "/" + name;
}

void add_output(StageManifest& manifest, const RunConfig& config, const std::string& name) {
  manifest.outputs[name] = file_digest(out_path(config, name));
}

void add_log(StageManifest& manifest, const RunConfig& config, const std::string& name) {
  manifest.logs[name] = file_digest(out_path(config, name));
}

GeneratorSpec spec_from_config(const RunConfig& config, std::uint64_t stage_seed) {
  GeneratorSpec spec = default_generator_spec(stage_seed, config.gen.target_delta_r2);
  spec.participants = config.gen.participants;
  spec.missingness = config.gen.missingness;
  spec.followup_fraction = config.gen.followup_fraction;
  spec.label_noise = config.gen.label_noise;
  if (config.gen.zero_lifestyle_effects) {
    spec.visit1_effects.clear();
    spec.followup_effects.clear();
  }
  return spec;
}

const std::vector<std::string>& lifestyle_names() {
  static const std::vector<std::string> names = {"act_moderate_min", "act_vigorous_min",
                                                 "sleep_hours", "steps_thousands"};
  return names;
}

std::vector<std::string> biomarker_columns(const CohortTable& table) {
  std::unordered_set<std::string> lifestyle(lifestyle_names().begin(), lifestyle_names().end());
  std::vector<std::string> markers;
  for (const auto& name : table.feature_names) {
    if (lifestyle.count(name) == 0) markers.push_back(name);
  }
  return markers;
}

// Ids of participants with a follow-up visit inside the 2-5 year
// window; the window filter is applied at ingestion.
std::set<std::string> prospective_ids(const CohortTable& followup) {
  std::set<std::string> ids;
  for (Index i = 0; i < followup.n_rows(); ++i) {
    const double elapsed = followup.elapsed_years[static_cast<std::size_t>(i)];
    if (!std::isnan(elapsed) && elapsed >= 2.0 && elapsed <= 5.0) {
      ids.insert(followup.ids[static_cast<std::size_t>(i)]);
    }
  }
  return ids;
}

// Preprocessing shared by prep and stats: completeness filter, final
// labels, age groups.
CohortTable load_and_label(const RunConfig& config) {
  const CohortTable raw = load_cohort(config.paths.cohort);
  const ReferenceRanges ranges = ReferenceRanges::load(config.paths.ranges);
  CohortTable table = filter_completeness(raw, config.prep.completeness_threshold);
  table = label_conditions(table, default_disease_codes(), ranges);
  assign_age_groups(table, AgeGroups::defaults());
  return table;
}

void write_splits_csv(const std::string& path, const CohortTable& table,
                      const SplitResult& split) {
  std::vector<std::string> assignment(static_cast<std::size_t>(table.n_rows()));
  for (Index r : split.train) assignment[static_cast<std::size_t>(r)] = "train";
  for (Index r : split.val) assignment[static_cast<std::size_t>(r)] = "val";
  for (Index r : split.test) assignment[static_cast<std::size_t>(r)] = "test";
  std::string out = "id,split\n";
  for (Index i = 0; i < table.n_rows(); ++i) {
    out += table.ids[static_cast<std::size_t>(i)] + "," +
           assignment[static_cast<std::size_t>(i)] + "\n";
  }
  write_lines(path, out);
}

std::unordered_map<std::string, std::string> load_splits(const std::string& path) {
  const CsvFile file = read_csv(path);
  if (file.header != std::vector<std::string>{"id", "split"}) {
    throw DataError("splits: expected header id,split in " + path);
  }
  std::unordered_map<std::string, std::string> split_of;
  for (const auto& row : file.rows) {
    if (row.size() != 2) throw DataError("splits: malformed row in " + path);
    split_of[row[0]] = row[1];
  }
  return split_of;
}

std::vector<Index> rows_in_split(const CohortTable& table,
                                 const std::unordered_map<std::string, std::string>& split_of,
                                 const std::string& split, int sex_value = -1) {
  std::vector<Index> rows;
  for (Index i = 0; i < table.n_rows(); ++i) {
    const auto r = static_cast<std::size_t>(i);
    const auto it = split_of.find(table.ids[r]);
    if (it == split_of.end()) throw DataError("splits: id missing from split file: " + table.ids[r]);
    if (it->second != split) continue;
    if (sex_value >= 0 && table.sex[r] != sex_value) continue;
    rows.push_back(i);
  }
  return rows;
}

struct SexModel {
  std::string name;       // "female", "male" or "pooled"
  int sex_value;          // 0, 1 or -1 for pooled
  std::string checkpoint; // file name
  std::string triplet_file;
  std::string log_file;
};

std::vector<SexModel> model_plan(const RunConfig& config) {
  if (config.train.per_sex) {
    return {{"female", 0, "model_female.ckpt", "triplets_female.csv", "train_log_female.csv"},
            {"male", 1, "model_male.ckpt", "triplets_male.csv", "train_log_male.csv"}};
  }
  return {{"pooled", -1, "model_pooled.ckpt", "triplets_pooled.csv", "train_log_pooled.csv"}};
}

// Embeds every row of the processed table with its sex's model (or the
// pooled model).
Mat embed_all_rows(const RunConfig& config, const CohortTable& processed) {
  Mat embeddings;
  for (const SexModel& plan : model_plan(config)) {
    const std::string path = out_path(config, plan.checkpoint);
    const EmbeddingModel model{load_checkpoint(path)};
    if (embeddings.size() == 0) {
      embeddings.resize(processed.n_rows(), model.output_dim());
    }
    std::vector<Index> rows;
    if (plan.sex_value < 0) {
      rows.resize(static_cast<std::size_t>(processed.n_rows()));
      for (Index i = 0; i < processed.n_rows(); ++i) rows[static_cast<std::size_t>(i)] = i;
    } else {
      rows = processed.rows_of_sex(plan.sex_value);
    }
    if (rows.empty()) continue;
    Mat features(static_cast<Index>(rows.size()), processed.n_features());
    for (std::size_t k = 0; k < rows.size(); ++k) features.row(static_cast<Index>(k)) = processed.features.row(rows[k]);
    const Mat sex_embeddings = embed(model, features);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      embeddings.row(rows[k]) = sex_embeddings.row(static_cast<Index>(k));
    }
  }
  return embeddings;
}

}  // namespace

StageManifest cmd_gen(const RunConfig& config) {
  const auto started = Clock::now();
  ensure_out_dir(config);
  StageManifest manifest;
  manifest.stage = "gen";
  manifest.stage_seed = derive_seed(config.seed, "gen");

  GeneratorSpec spec = spec_from_config(config, manifest.stage_seed);
  GeneratedCohort gen = generate_cohort(spec);
  const CohortTable followup = generate_followup(spec, gen.table, gen.truth);

  save_cohort(config.paths.cohort, gen.table);
  save_cohort(config.paths.followup, followup);
  gen.ranges.save(config.paths.ranges);
  save_ground_truth(config.paths.ground_truth, gen.table, gen.truth, spec.biomarker_names());

  manifest.outputs["cohort.csv"] = file_digest(config.paths.cohort);
  manifest.outputs["followup.csv"] = file_digest(config.paths.followup);
  manifest.outputs["ranges.csv"] = file_digest(config.paths.ranges);
  manifest.outputs["ground_truth.csv"] = file_digest(config.paths.ground_truth);
  manifest.format_versions["cohort_csv"] = "1";
  manifest.wall_seconds = seconds_since(started);
  write_stage_manifest(config.paths.out_dir, manifest, run_config_to_json(config));
  return manifest;
}

StageManifest cmd_prep(const RunConfig& config) {
  const auto started = Clock::now();
  ensure_out_dir(config);
  StageManifest manifest;
  manifest.stage = "prep";
  manifest.stage_seed = derive_seed(config.seed, "prep");
  Rng rng(manifest.stage_seed);

  CohortTable table = load_and_label(config);
  const CohortTable followup = load_cohort(config.paths.followup);
  const std::set<std::string> holdout = prospective_ids(followup);

  Rng split_rng = rng.derive("split");
  const SplitResult split =
      split_cohort(table, config.prep.train_frac, config.prep.val_frac, split_rng, holdout);
  write_splits_csv(out_path(config, "splits.csv"), table, split);

  // Quantile transforms are always fitted per sex on the training rows,
  // regardless of whether one pooled model or two are trained later.
  for (int sex_value : {0, 1}) {
    std::vector<Index> train_rows;
    for (Index r : split.train) {
      if (table.sex[static_cast<std::size_t>(r)] == sex_value) train_rows.push_back(r);
    }
    if (train_rows.empty()) continue;
    CohortTable train_subset = table.subset(train_rows);
    std::vector<std::string> skipped;
    const QuantileTransform transform =
        quantile_normalize(train_subset, table.feature_names, &skipped);
    const std::string sex_name = sex_value == 0 ? "female" : "male";
    transform.save(out_path(config, "transform_" + sex_name + ".tcqn"));
    manifest.outputs["transform_" + sex_name + ".tcqn"] =
        file_digest(out_path(config, "transform_" + sex_name + ".tcqn"));

    // Map every row of this sex through the training transform.
    for (Index i = 0; i < table.n_rows(); ++i) {
      if (table.sex[static_cast<std::size_t>(i)] != sex_value) continue;
      for (const auto& name : transform.names()) {
        const Index j = table.feature_index(name);
        table.features(i, j) = transform.apply(name, table.features(i, j));
      }
    }
  }

  // Triplets from the training split of each planned model.
  for (const SexModel& plan : model_plan(config)) {
    std::vector<Index> train_rows;
    for (Index r : split.train) {
      if (plan.sex_value < 0 || table.sex[static_cast<std::size_t>(r)] == plan.sex_value) {
        train_rows.push_back(r);
      }
    }
    if (train_rows.empty()) throw DataError("prep: empty training split for " + plan.name);
    const CohortTable train_subset = table.subset(train_rows);
    Rng triplet_rng = rng.derive("triplets_" + plan.name);
    const TripletSet triplets =
        sample_triplets(train_subset, static_cast<std::size_t>(config.prep.triplets), triplet_rng);
    save_triplets(out_path(config, plan.triplet_file), triplets, train_subset);
    manifest.outputs[plan.triplet_file] = file_digest(out_path(config, plan.triplet_file));
  }

  save_cohort(out_path(config, "processed.csv"), table);
  add_output(manifest, config, "processed.csv");
  add_output(manifest, config, "splits.csv");
  manifest.format_versions["transform"] = kTransformMagic;
  manifest.wall_seconds = seconds_since(started);
  write_stage_manifest(config.paths.out_dir, manifest, run_config_to_json(config));
  return manifest;
}

StageManifest cmd_train(const RunConfig& config) {
  const auto started = Clock::now();
  ensure_out_dir(config);
  StageManifest manifest;
  manifest.stage = "train";
  manifest.stage_seed = derive_seed(config.seed, "train");

  const CohortTable processed = load_cohort(out_path(config, "processed.csv"));
  const auto split_of = load_splits(out_path(config, "splits.csv"));

  for (const SexModel& plan : model_plan(config)) {
    const std::vector<Index> train_rows =
        rows_in_split(processed, split_of, "train", plan.sex_value);
    if (train_rows.empty()) throw DataError("train: empty training split for " + plan.name);
    const CohortTable train_subset = processed.subset(train_rows);
    const TripletSet triplets =
        load_triplets(out_path(config, plan.triplet_file), train_subset);

    // Validation triplets are sampled on the fly from the val split;
    // small or degenerate val splits simply go unmonitored.
    const std::vector<Index> val_rows = rows_in_split(processed, split_of, "val", plan.sex_value);
    CohortTable val_subset;
    TripletSet val_triplets;
    bool have_val = false;
    if (!val_rows.empty()) {
      val_subset = processed.subset(val_rows);
      try {
        Rng val_rng = Rng(manifest.stage_seed).derive("val_triplets_" + plan.name);
        val_triplets = sample_triplets(
            val_subset, static_cast<std::size_t>(config.train.val_triplets), val_rng);
        have_val = true;
      } catch (const DataError&) {
        have_val = false;
      }
    }

    const TrainConfig train_config =
        config.train_config(derive_seed(manifest.stage_seed, plan.name));
    const TrainResult result = train_embedding_model(
        train_subset.features, triplets, train_config, have_val ? &val_subset.features : nullptr,
        have_val ? &val_triplets : nullptr);

    save_checkpoint(out_path(config, plan.checkpoint), result.model.params);
    write_train_log_csv(out_path(config, plan.log_file), result.log);
    add_output(manifest, config, plan.checkpoint);
    add_log(manifest, config, plan.log_file);
  }
  manifest.format_versions["checkpoint"] = kCheckpointMagic;
  manifest.wall_seconds = seconds_since(started);
  write_stage_manifest(config.paths.out_dir, manifest, run_config_to_json(config));
  return manifest;
}

StageManifest cmd_stats(const RunConfig& config) {
  const auto started = Clock::now();
  ensure_out_dir(config);
  StageManifest manifest;
  manifest.stage = "stats";
  manifest.stage_seed = derive_seed(config.seed, "stats");

  // Tests run on the labeled raw-scale table, not the normalized one.
  const CohortTable table = load_and_label(config);
  const LifestyleStrata strata = stratify_lifestyle(table, LifestyleColumns{});
  const SignificanceReport report =
      lifestyle_significance_report(table, strata, biomarker_columns(table), config.stats.q);
  write_significance_csv(out_path(config, "stats_report.csv"), report, AgeGroups::defaults());

  add_output(manifest, config, "stats_report.csv");
  manifest.wall_seconds = seconds_since(started);
  write_stage_manifest(config.paths.out_dir, manifest, run_config_to_json(config));
  return manifest;
}

StageManifest cmd_embed(const RunConfig& config) {
  const auto started = Clock::now();
  ensure_out_dir(config);
  StageManifest manifest;
  manifest.stage = "embed";
  manifest.stage_seed = derive_seed(config.seed, "embed");

  const CohortTable processed = load_cohort(out_path(config, "processed.csv"));
  const Mat embeddings = embed_all_rows(config, processed);

  std::string out = "id";
  for (Index j = 0; j < embeddings.cols(); ++j) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "e%02ld", static_cast<long>(j));
    out += ",";
    out += buf;
  }
  out += '\n';
  for (Index i = 0; i < processed.n_rows(); ++i) {
    out += processed.ids[static_cast<std::size_t>(i)];
    for (Index j = 0; j < embeddings.cols(); ++j) {
      out += ',';
      out += format_cell(embeddings(i, j));
    }
    out += '\n';
  }
  write_lines(out_path(config, "embeddings.csv"), out);

  add_output(manifest, config, "embeddings.csv");
  manifest.wall_seconds = seconds_since(started);
  write_stage_manifest(config.paths.out_dir, manifest, run_config_to_json(config));
  return manifest;
}

StageManifest cmd_eval(const RunConfig& config) {
  const auto started = Clock::now();
  ensure_out_dir(config);
  StageManifest manifest;
  manifest.stage = "eval";
  manifest.stage_seed = derive_seed(config.seed, "eval");

  const CohortTable processed = load_cohort(out_path(config, "processed.csv"));
  const auto split_of = load_splits(out_path(config, "splits.csv"));
  const std::vector<Index> train_rows = rows_in_split(processed, split_of, "train");
  const std::vector<Index> test_rows = rows_in_split(processed, split_of, "test");

  auto gather = [&](const std::vector<Index>& rows) {
    Mat m(static_cast<Index>(rows.size()), processed.n_features());
    for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Index>(k)) = processed.features.row(rows[k]);
    return m;
  };
  const Mat raw_train = gather(train_rows);
  const Mat raw_test = gather(test_rows);

  const Mat all_embeddings = embed_all_rows(config, processed);
  auto gather_embeddings = [&](const std::vector<Index>& rows) {
    Mat m(static_cast<Index>(rows.size()), all_embeddings.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<Index>(k)) = all_embeddings.row(rows[k]);
    return m;
  };

  const int pca_dim = config.eval.pca_dim > 0
                          ? config.eval.pca_dim
                          : std::min<int>(static_cast<int>(all_embeddings.cols()),
                                          static_cast<int>(processed.n_features()));
  const PcaTransform pca = pca_fit(raw_train, pca_dim);

  std::vector<RepresentationSet> reps;
  reps.push_back({"raw", raw_train, raw_test});
  reps.push_back({"pca", pca_apply(pca, raw_train), pca_apply(pca, raw_test)});
  reps.push_back({"deep", gather_embeddings(train_rows), gather_embeddings(test_rows)});

  // Class ids from the sorted label vocabulary of the full table.
  std::set<std::string> labels(processed.condition.begin(), processed.condition.end());
  std::unordered_map<std::string, int> class_id;
  for (const auto& label : labels) {
    class_id.emplace(label, static_cast<int>(class_id.size()));
  }
  auto labels_of = [&](const std::vector<Index>& rows, bool binary) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (Index r : rows) {
      const std::string& label = processed.condition[static_cast<std::size_t>(r)];
      if (binary) {
        out.push_back(label == kApparentlyHealthy || label == kBonaFideHealthy ? 0 : 1);
      } else {
        out.push_back(class_id.at(label));
      }
    }
    return out;
  };
  std::vector<EvalTask> tasks;
  tasks.push_back({"binary", labels_of(train_rows, true), labels_of(test_rows, true), 2});
  tasks.push_back({"multiclass-12", labels_of(train_rows, false), labels_of(test_rows, false),
                   static_cast<int>(class_id.size())});

  const auto evals = evaluate_representations(reps, tasks, config.eval.knn_k, config.seed);
  write_classifier_csv(out_path(config, "eval_classifiers.csv"), evals);

  add_output(manifest, config, "eval_classifiers.csv");
  manifest.wall_seconds = seconds_since(started);
  write_stage_manifest(config.paths.out_dir, manifest, run_config_to_json(config));
  return manifest;
}

StageManifest cmd_predict(const RunConfig& config) {
  const auto started = Clock::now();
  ensure_out_dir(config);
  StageManifest manifest;
  manifest.stage = "predict";
  manifest.stage_seed = derive_seed(config.seed, "predict");

  const CohortTable processed = load_cohort(out_path(config, "processed.csv"));
  const CohortTable followup = load_cohort(config.paths.followup);
  const Mat embeddings = embed_all_rows(config, processed);

  const std::vector<std::string> biomarkers = biomarker_columns(processed);
  std::vector<std::string> lifestyle;
  for (const auto& name : lifestyle_names()) {
    if (processed.has_feature(name)) lifestyle.push_back(name);
  }

  std::vector<std::string> markers = config.predict.markers;
  if (markers.empty()) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "bm%02d", default_marker_of_interest());
    markers.push_back(processed.has_feature(buf) ? buf : biomarkers.front());
  }

  PredictOptions options;
  options.cv_folds = config.predict.folds;
  options.include_elapsed = config.predict.include_elapsed;
  options.healthy_only = config.predict.healthy_only;
  options.min_participants = config.predict.min_participants;
  options.gbt = config.predict.gbt;

  Rng rng(manifest.stage_seed);
  const PredictOutcome outcome = predict_future_values(processed, embeddings, followup, biomarkers,
                                                       lifestyle, markers, options, rng);
  write_prediction_folds_csv(out_path(config, "predict_folds.csv"), outcome);
  write_prediction_summary_csv(out_path(config, "predict_summary.csv"), outcome);

  add_output(manifest, config, "predict_folds.csv");
  add_output(manifest, config, "predict_summary.csv");
  manifest.wall_seconds = seconds_since(started);
  write_stage_manifest(config.paths.out_dir, manifest, run_config_to_json(config));
  return manifest;
}

std::vector<StageManifest> cmd_pipeline(const RunConfig& config) {
  std::vector<StageManifest> stages;
  stages.push_back(cmd_gen(config));
  stages.push_back(cmd_prep(config));
  stages.push_back(cmd_train(config));
  stages.push_back(cmd_stats(config));
  stages.push_back(cmd_embed(config));
  stages.push_back(cmd_eval(config));
  stages.push_back(cmd_predict(config));
  write_run_manifest(config.paths.out_dir, stages, run_config_to_json(config));
  return stages;
}

}  // namespace tcemb
