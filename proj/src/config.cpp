#include "tcemb/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tcemb/error.hpp"

namespace tcemb {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t");
  std::size_t end = s.find_last_not_of(" \t");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

long to_long(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const long v = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: integer expected for " + key + ", got '" + value + "'");
  }
}

double to_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: number expected for " + key + ", got '" + value + "'");
  }
}

bool to_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config: boolean expected for " + key + ", got '" + value + "'");
}

std::vector<std::string> to_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string trimmed = trim(item);
    if (!trimmed.empty()) items.push_back(trimmed);
  }
  return items;
}

}  // namespace

void RunConfig::resolve_paths() {
  const std::string base = paths.out_dir.empty() ? "." : paths.out_dir;
  if (paths.cohort.empty()) paths.cohort = base + "/cohort.csv";
  if (paths.followup.empty()) paths.followup = base + "/followup.csv";
  if (paths.ranges.empty()) paths.ranges = base + "/ranges.csv";
  if (paths.ground_truth.empty()) paths.ground_truth = base + "/ground_truth.csv";
}

TrainConfig RunConfig::train_config(std::uint64_t stage_seed) const {
  TrainConfig config;
  config.loss = train.loss;
  config.margin = train.margin;
  config.dim = train.dim;
  config.hidden = {train.hidden1, train.hidden2};
  config.dropout = train.dropout;
  config.schedule.initial = train.lr;
  config.schedule.decay = train.decay;
  config.schedule.interval = train.decay_interval;
  config.schedule.start_epoch = train.decay_start;
  config.schedule.final_epoch = std::max(train.epochs, train.decay_start);
  config.epochs = train.epochs;
  config.batch_size = train.batch;
  config.seed = stage_seed;
  return config;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config: bad section at line " + std::to_string(line_no));
      section = line.substr(1, line.size() - 2);
      if (section != "paths" && section != "gen" && section != "prep" && section != "train" &&
          section != "stats" && section != "eval" && section != "predict") {
        throw ConfigError("config: unknown section [" + section + "]");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: expected key = value at line " + std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string qualified = section.empty() ? key : section + "." + key;

    if (qualified == "seed") {
      config.seed = static_cast<std::uint64_t>(to_long(value, qualified));
    } else if (qualified == "paths.out_dir") {
      config.paths.out_dir = value;
    } else if (qualified == "paths.cohort") {
      config.paths.cohort = value;
    } else if (qualified == "paths.followup") {
      config.paths.followup = value;
    } else if (qualified == "paths.ranges") {
      config.paths.ranges = value;
    } else if (qualified == "paths.ground_truth") {
      config.paths.ground_truth = value;
    } else if (qualified == "gen.participants") {
      config.gen.participants = to_long(value, qualified);
    } else if (qualified == "gen.missingness") {
      config.gen.missingness = to_double(value, qualified);
    } else if (qualified == "gen.followup_fraction") {
      config.gen.followup_fraction = to_double(value, qualified);
    } else if (qualified == "gen.target_delta_r2") {
      config.gen.target_delta_r2 = to_double(value, qualified);
    } else if (qualified == "gen.label_noise") {
      config.gen.label_noise = to_double(value, qualified);
    } else if (qualified == "gen.zero_lifestyle_effects") {
      config.gen.zero_lifestyle_effects = to_bool(value, qualified);
    } else if (qualified == "prep.completeness_threshold") {
      config.prep.completeness_threshold = to_double(value, qualified);
    } else if (qualified == "prep.train_frac") {
      config.prep.train_frac = to_double(value, qualified);
    } else if (qualified == "prep.val_frac") {
      config.prep.val_frac = to_double(value, qualified);
    } else if (qualified == "prep.triplets") {
      config.prep.triplets = to_long(value, qualified);
    } else if (qualified == "train.loss") {
      config.train.loss = loss_kind_from_string(value);
    } else if (qualified == "train.margin") {
      config.train.margin = to_double(value, qualified);
    } else if (qualified == "train.dim") {
      config.train.dim = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "train.hidden1") {
      config.train.hidden1 = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "train.hidden2") {
      config.train.hidden2 = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "train.dropout") {
      config.train.dropout = to_double(value, qualified);
    } else if (qualified == "train.lr") {
      config.train.lr = to_double(value, qualified);
    } else if (qualified == "train.decay") {
      config.train.decay = to_double(value, qualified);
    } else if (qualified == "train.decay_interval") {
      config.train.decay_interval = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "train.decay_start") {
      config.train.decay_start = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "train.epochs") {
      config.train.epochs = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "train.batch") {
      config.train.batch = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "train.per_sex") {
      config.train.per_sex = to_bool(value, qualified);
    } else if (qualified == "train.val_triplets") {
      config.train.val_triplets = to_long(value, qualified);
    } else if (qualified == "stats.q") {
      config.stats.q = to_double(value, qualified);
    } else if (qualified == "eval.knn_k") {
      config.eval.knn_k = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "eval.pca_dim") {
      config.eval.pca_dim = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "predict.markers") {
      config.predict.markers = value == "auto" ? std::vector<std::string>{} : to_list(value);
    } else if (qualified == "predict.folds") {
      config.predict.folds = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "predict.healthy_only") {
      config.predict.healthy_only = to_bool(value, qualified);
    } else if (qualified == "predict.include_elapsed") {
      config.predict.include_elapsed = to_bool(value, qualified);
    } else if (qualified == "predict.min_participants") {
      config.predict.min_participants = to_long(value, qualified);
    } else if (qualified == "predict.gbt_rounds") {
      config.predict.gbt.rounds = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "predict.gbt_depth") {
      config.predict.gbt.depth = static_cast<int>(to_long(value, qualified));
    } else if (qualified == "predict.gbt_lr") {
      config.predict.gbt.learning_rate = to_double(value, qualified);
    } else {
      throw ConfigError("config: unknown key '" + qualified + "'");
    }
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

std::string run_config_to_json(const RunConfig& config) {
  nlohmann::json j;
  j["seed"] = config.seed;
  j["paths"] = {{"out_dir", config.paths.out_dir},
                {"cohort", config.paths.cohort},
                {"followup", config.paths.followup},
                {"ranges", config.paths.ranges},
                {"ground_truth", config.paths.ground_truth}};
  j["gen"] = {{"participants", config.gen.participants},
              {"missingness", config.gen.missingness},
              {"followup_fraction", config.gen.followup_fraction},
              {"target_delta_r2", config.gen.target_delta_r2},
              {"label_noise", config.gen.label_noise},
              {"zero_lifestyle_effects", config.gen.zero_lifestyle_effects}};
  j["prep"] = {{"completeness_threshold", config.prep.completeness_threshold},
               {"train_frac", config.prep.train_frac},
               {"val_frac", config.prep.val_frac},
               {"triplets", config.prep.triplets}};
  j["train"] = {{"loss", to_string(config.train.loss)},
                {"margin", config.train.margin},
                {"dim", config.train.dim},
                {"hidden1", config.train.hidden1},
                {"hidden2", config.train.hidden2},
                {"dropout", config.train.dropout},
                {"lr", config.train.lr},
                {"decay", config.train.decay},
                {"decay_interval", config.train.decay_interval},
                {"decay_start", config.train.decay_start},
                {"epochs", config.train.epochs},
                {"batch", config.train.batch},
                {"per_sex", config.train.per_sex},
                {"val_triplets", config.train.val_triplets}};
  j["stats"] = {{"q", config.stats.q}};
  j["eval"] = {{"knn_k", config.eval.knn_k}, {"pca_dim", config.eval.pca_dim}};
  j["predict"] = {{"markers", config.predict.markers},
                  {"folds", config.predict.folds},
                  {"healthy_only", config.predict.healthy_only},
                  {"include_elapsed", config.predict.include_elapsed},
                  {"min_participants", config.predict.min_participants},
                  {"gbt_rounds", config.predict.gbt.rounds},
                  {"gbt_depth", config.predict.gbt.depth},
                  {"gbt_lr", config.predict.gbt.learning_rate}};
  return j.dump(2);
}

}  // namespace tcemb
