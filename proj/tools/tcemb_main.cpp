// tcemb: synthetic-cohort pipeline for similarity-based patient
// embeddings and future biomarker prediction.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "tcemb/config.hpp"
#include "tcemb/error.hpp"
#include "tcemb/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::string loss;
  long long seed = -1;
  bool have_seed = false;
};

tcemb::RunConfig effective_config(const CliOptions& options) {
  tcemb::RunConfig config;
  if (!options.config_path.empty()) config = tcemb::load_run_config(options.config_path);
  if (!options.out_dir.empty()) {
    config.paths.out_dir = options.out_dir;
    // Re-anchor the default data paths when only --out was given.
    config.paths.cohort.clear();
    config.paths.followup.clear();
    config.paths.ranges.clear();
    config.paths.ground_truth.clear();
  }
  if (options.have_seed) config.seed = static_cast<std::uint64_t>(options.seed);
  if (!options.loss.empty()) config.train.loss = tcemb::loss_kind_from_string(options.loss);
  config.resolve_paths();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tcemb: triplet-embedding cohort pipeline"};
  app.require_subcommand(1);

  CliOptions options;
  app.add_option("--config", options.config_path, "Run configuration file");
  app.add_option("--out", options.out_dir, "Output directory (overrides the config)");
  app.add_option("--loss", options.loss, "Loss selector: proposed|triplet|swap")
      ->check(CLI::IsMember({"proposed", "triplet", "swap"}));
  auto* seed_opt = app.add_option("--seed", options.seed, "Seed override");

  const char* stage_names[] = {"gen", "prep", "train", "stats", "embed", "eval", "predict",
                               "pipeline"};
  const char* stage_help[] = {
      "Generate a synthetic cohort, follow-up visits, ranges and ground truth",
      "Preprocess: filter, label, split, normalize, sample triplets",
      "Train the embedding network(s)",
      "Lifestyle significance report (t-tests + FDR correction)",
      "Export embedding coordinates for every participant",
      "Classifier comparison across representations",
      "Future biomarker value prediction with cross-validated GBT",
      "Run every stage in order"};
  for (int i = 0; i < 8; ++i) {
    app.add_subcommand(stage_names[i], stage_help[i])->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);
  options.have_seed = seed_opt->count() > 0;

  try {
    const tcemb::RunConfig config = effective_config(options);
    const std::string stage = app.get_subcommands().front()->get_name();
    if (stage == "gen") {
      tcemb::cmd_gen(config);
    } else if (stage == "prep") {
      tcemb::cmd_prep(config);
    } else if (stage == "train") {
      tcemb::cmd_train(config);
    } else if (stage == "stats") {
      tcemb::cmd_stats(config);
    } else if (stage == "embed") {
      tcemb::cmd_embed(config);
    } else if (stage == "eval") {
      tcemb::cmd_eval(config);
    } else if (stage == "predict") {
      tcemb::cmd_predict(config);
    } else if (stage == "pipeline") {
      tcemb::cmd_pipeline(config);
    }
    return kExitOk;
  } catch (const tcemb::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const tcemb::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const tcemb::Error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
