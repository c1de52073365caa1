#include "tcemb/synthcohort.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "tcemb/csv.hpp"
#include "tcemb/error.hpp"
#include "tcemb/rng.hpp"
#include "tcemb/special.hpp"

namespace tcemb {

void GeneratorSpec::validate() const {
  if (participants <= 0) throw ConfigError("generator: participants must be positive");
  if (n_biomarkers <= 0) throw ConfigError("generator: need at least one biomarker");
  if (classes.empty()) throw ConfigError("generator: no classes defined");
  double total = 0.0;
  std::unordered_set<std::string> names;
  for (const auto& c : classes) {
    if (c.prevalence < 0.0) throw ConfigError("generator: negative prevalence for " + c.name);
    if (c.sd_scale < 0.0) throw ConfigError("generator: negative sd scale for " + c.name);
    if (!names.insert(c.name).second) throw ConfigError("generator: duplicate class " + c.name);
    total += c.prevalence;
    for (const auto& [j, v] : c.mean_offsets) {
      if (j < 0 || j >= n_biomarkers) throw ConfigError("generator: offset index out of range");
      if (!std::isfinite(v)) throw ConfigError("generator: non-finite offset");
    }
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("generator: prevalences must sum to 1");
  for (const auto& c : classes) {
    for (const auto& p : c.parents) {
      if (names.count(p) == 0) throw ConfigError("generator: unknown parent class " + p);
    }
  }
  for (const auto* effects : {&visit1_effects, &followup_effects}) {
    for (const auto& e : *effects) {
      if (e.axis != "activity" && e.axis != "sleep") {
        throw ConfigError("generator: effect axis must be activity or sleep");
      }
      if (!std::isfinite(e.effect)) throw ConfigError("generator: non-finite effect size");
      for (int j : e.biomarkers) {
        if (j < 0 || j >= n_biomarkers) throw ConfigError("generator: effect index out of range");
      }
    }
  }
  if (missingness < 0.0 || missingness > 0.5) {
    throw ConfigError("generator: missingness outside [0, 0.5]");
  }
  if (label_noise < 0.0 || label_noise > 0.5) {
    throw ConfigError("generator: label noise outside [0, 0.5]");
  }
  if (lowrank_rank < 0 || lowrank_scale < 0.0) throw ConfigError("generator: bad low-rank spec");
  if (followup_fraction < 0.0 || followup_fraction > 1.0) {
    throw ConfigError("generator: followup fraction outside [0,1]");
  }
}

std::vector<std::string> GeneratorSpec::biomarker_names() const {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n_biomarkers));
  for (int j = 0; j < n_biomarkers; ++j) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "bm%02d", j);
    names.emplace_back(buf);
  }
  return names;
}

std::vector<std::string> GeneratorSpec::lifestyle_names() const {
  return {"act_moderate_min", "act_vigorous_min", "sleep_hours", "steps_thousands"};
}

namespace {

// Own offsets plus the summed offsets of all (transitively) linked
// parent classes.
std::vector<double> resolved_mean(const GeneratorSpec& spec, std::size_t class_index) {
  std::vector<double> mean(static_cast<std::size_t>(spec.n_biomarkers), 0.0);
  std::unordered_map<std::string, std::size_t> index_of;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) index_of[spec.classes[c].name] = c;
  std::vector<std::string> stack = {spec.classes[class_index].name};
  std::unordered_set<std::string> visited;
  while (!stack.empty()) {
    const std::string name = stack.back();
    stack.pop_back();
    if (!visited.insert(name).second) continue;
    const auto& cls = spec.classes[index_of.at(name)];
    for (const auto& [j, v] : cls.mean_offsets) mean[static_cast<std::size_t>(j)] += v;
    for (const auto& p : cls.parents) stack.push_back(p);
  }
  return mean;
}

double activity_effect_on(const std::vector<GeneratorSpec::LifestyleEffect>& effects,
                          const std::string& axis, int biomarker) {
  double total = 0.0;
  for (const auto& e : effects) {
    if (e.axis != axis) continue;
    for (int j : e.biomarkers) {
      if (j == biomarker) total += e.effect;
    }
  }
  return total;
}

}  // namespace

double analytic_active_probability(const GeneratorSpec& spec) {
  const double p_mod = 1.0 - normal_cdf((150.0 - spec.moderate_mean) / spec.moderate_sd);
  const double p_vig = 1.0 - normal_cdf((75.0 - spec.vigorous_mean) / spec.vigorous_sd);
  return 1.0 - (1.0 - p_mod) * (1.0 - p_vig);
}

double analytic_followup_delta_r2(const GeneratorSpec& spec, int biomarker) {
  if (activity_effect_on(spec.visit1_effects, "activity", biomarker) != 0.0 ||
      activity_effect_on(spec.visit1_effects, "sleep", biomarker) != 0.0) {
    throw ConfigError("analytic_followup_delta_r2: marker must be free of visit-1 effects");
  }
  const double beta = activity_effect_on(spec.followup_effects, "activity", biomarker);
  const double pi = analytic_active_probability(spec);
  const double var_active = pi * (1.0 - pi);

  const bool lowrank_clean =
      std::find(spec.lowrank_free.begin(), spec.lowrank_free.end(), biomarker) !=
      spec.lowrank_free.end();
  const double lowrank_var =
      lowrank_clean ? 0.0
                    : static_cast<double>(spec.lowrank_rank) * spec.lowrank_scale *
                          spec.lowrank_scale;

  double mean_class = 0.0, mean_sq_class = 0.0, within_var = 0.0;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    const double mu = resolved_mean(spec, c)[static_cast<std::size_t>(biomarker)];
    const double prev = spec.classes[c].prevalence;
    mean_class += prev * mu;
    mean_sq_class += prev * mu * mu;
    within_var += prev * (spec.classes[c].sd_scale * spec.classes[c].sd_scale + lowrank_var);
  }
  const double between_var = mean_sq_class - mean_class * mean_class;

  const double a = spec.followup_alpha;
  const double g = spec.followup_gamma;
  const double var_b2 = (a + g) * (a + g) * between_var + a * a * within_var +
                        beta * beta * var_active +
                        spec.followup_noise_sd * spec.followup_noise_sd;
  return beta * beta * var_active / var_b2;
}

int default_marker_of_interest() { return 20; }

GeneratorSpec default_generator_spec(std::uint64_t seed, double target_delta_r2) {
  GeneratorSpec spec;
  spec.seed = seed;
  spec.participants = 5000;
  spec.n_biomarkers = 30;
  spec.lowrank_rank = 3;
  spec.lowrank_scale = 1.2;
  spec.lowrank_free = {20, 21, 22};
  spec.missingness = 0.05;
  spec.label_noise = 0.08;

  using ClassDef = GeneratorSpec::ClassDef;
  auto cls = [](std::string name, std::string code, double prev, double sd,
                std::map<int, double> offsets, std::vector<std::string> parents) {
    ClassDef c;
    c.name = std::move(name);
    c.emitted_code = std::move(code);
    c.prevalence = prev;
    c.sd_scale = sd;
    c.mean_offsets = std::move(offsets);
    c.parents = std::move(parents);
    return c;
  };
  // Class dispersions vary deliberately (tight healthy core, loose
  // comorbidity groups), mirroring the high in-class variability of
  // health records.
  spec.classes = {
      cls("healthy_core", kRawHealthyCode, 0.22, 0.7, {}, {}),
      cls("healthy_margin", kRawHealthyCode, 0.22, 1.5, {{10, 9.0}, {11, 7.5}}, {}),
      cls("diabetes", "diabetes", 0.07, 0.9, {{0, 2.6}, {1, 2.0}}, {}),
      cls("cardio", "cardio", 0.07, 1.1, {{2, 2.6}, {3, 2.0}}, {}),
      cls("respiratory", "respiratory", 0.06, 0.9, {{4, 2.6}, {5, -2.0}}, {}),
      cls("cancer", "cancer", 0.06, 1.3, {{6, -2.6}, {7, 2.0}}, {}),
      cls("other_serious", "other_serious", 0.05, 1.1, {{8, 2.4}, {9, 1.8}}, {}),
      cls("multiple_nonmetabolic", "multiple_nonmetabolic", 0.05, 1.4, {},
          {"respiratory", "cancer"}),
      cls("diabetes_cardio", "diabetes_cardio", 0.06, 1.3, {}, {"diabetes", "cardio"}),
      cls("diabetes_serious", "diabetes_serious", 0.05, 1.4, {}, {"diabetes", "other_serious"}),
      cls("diabetes_cardio_serious", "diabetes_cardio_serious", 0.04, 1.5, {},
          {"diabetes", "cardio", "other_serious"}),
      cls("cardio_serious", "cardio_serious", 0.05, 1.4, {}, {"cardio", "other_serious"}),
  };

  spec.visit1_effects = {
      {"activity", {12, 13, 14}, 0.8},
      {"sleep", {15, 16}, 0.7},
  };

  // Follow-up activity effect on the designated marker, sized so the
  // analytic R-squared gain of adding lifestyle equals the target.
  const int marker = default_marker_of_interest();
  spec.followup_effects = {{"activity", {marker}, 1.0}};
  const double pi = analytic_active_probability(spec);
  const double var_active = pi * (1.0 - pi);
  // Variance of b2 with the activity term removed (marker is class- and
  // lowrank-free, so only alpha^2 * within + noise^2 remain).
  double within_var = 0.0;
  for (const auto& c : spec.classes) within_var += c.prevalence * c.sd_scale * c.sd_scale;
  const double base_var = spec.followup_alpha * spec.followup_alpha * within_var +
                          spec.followup_noise_sd * spec.followup_noise_sd;
  const double beta_sq = target_delta_r2 * base_var / (var_active * (1.0 - target_delta_r2));
  spec.followup_effects[0].effect = std::sqrt(beta_sq);
  return spec;
}

GeneratedCohort generate_cohort(const GeneratorSpec& spec) {
  spec.validate();
  Rng rng = Rng(spec.seed).derive("generate_cohort");

  const auto n = static_cast<std::size_t>(spec.participants);
  const int m = spec.n_biomarkers;
  const auto biomarkers = spec.biomarker_names();
  const auto lifestyle = spec.lifestyle_names();
  const AgeGroups groups = AgeGroups::defaults();

  // Resolved class means and the shared low-rank loading matrix.
  std::vector<std::vector<double>> class_mean;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) class_mean.push_back(resolved_mean(spec, c));
  Mat loadings = Mat::Zero(m, spec.lowrank_rank);
  for (int j = 0; j < m; ++j) {
    const bool free = std::find(spec.lowrank_free.begin(), spec.lowrank_free.end(), j) !=
                      spec.lowrank_free.end();
    for (int r = 0; r < spec.lowrank_rank; ++r) {
      const double draw = rng.normal();
      if (!free) loadings(j, r) = spec.lowrank_scale * draw;
    }
  }

  GeneratedCohort out;
  CohortTable& table = out.table;
  table.feature_names = biomarkers;
  for (const auto& name : lifestyle) table.feature_names.push_back(name);
  const auto n_features = static_cast<Index>(table.feature_names.size());
  table.features.resize(static_cast<Index>(n), n_features);

  GroundTruth& truth = out.truth;
  truth.visit1_complete.resize(static_cast<Index>(n), m);
  truth.class_index.resize(n);
  truth.true_class.resize(n);
  truth.true_active.resize(n);
  truth.true_median_sleep.resize(n);

  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& c : spec.classes) {
    acc += c.prevalence;
    cumulative.push_back(acc);
  }

  for (std::size_t i = 0; i < n; ++i) {
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "p%06zu", i + 1);
    table.ids.emplace_back(idbuf);
    table.sex.push_back(rng.below(2) == 0 ? 0 : 1);
    const auto g = static_cast<std::size_t>(rng.below(groups.size()));
    const int low = groups.ranges[g].low;
    const int high = groups.ranges[g].high;
    table.age.push_back(static_cast<double>(low + static_cast<int>(rng.below(
                            static_cast<std::uint64_t>(high - low + 1)))));
    table.visit_index.push_back(1);
    table.elapsed_years.push_back(std::nan(""));

    const double u = rng.uniform();
    std::size_t cls = 0;
    while (cls + 1 < cumulative.size() && u >= cumulative[cls]) ++cls;
    truth.class_index[i] = static_cast<int>(cls);
    truth.true_class[i] = spec.classes[cls].name;
    std::string code = spec.classes[cls].emitted_code;
    // Miscoded diagnoses: swap for another disease code.
    const double noise_draw = rng.uniform();
    if (spec.label_noise > 0.0 && code != kRawHealthyCode && noise_draw < spec.label_noise) {
      std::vector<std::string> others;
      for (const auto& c : spec.classes) {
        if (c.emitted_code != kRawHealthyCode && c.emitted_code != code) {
          others.push_back(c.emitted_code);
        }
      }
      if (!others.empty()) code = others[rng.below(others.size())];
    }
    table.condition.push_back(code);

    // Lifestyle draws.
    const double moderate = std::max(0.0, spec.moderate_mean + spec.moderate_sd * rng.normal());
    const double vigorous = std::max(0.0, spec.vigorous_mean + spec.vigorous_sd * rng.normal());
    const double sleep = spec.sleep_mean + spec.sleep_sd * rng.normal();
    const double steps = std::max(0.0, spec.steps_mean + spec.steps_sd * rng.normal());
    const bool active = moderate >= 150.0 || vigorous >= 75.0;
    const bool median_sleep = sleep >= spec.sleep_reference;
    truth.true_active[i] = active ? 1 : 0;
    truth.true_median_sleep[i] = median_sleep ? 1 : 0;

    // Shared factors.
    Vec z(spec.lowrank_rank);
    for (int r = 0; r < spec.lowrank_rank; ++r) z[r] = rng.normal();

    for (int j = 0; j < m; ++j) {
      double value = class_mean[cls][static_cast<std::size_t>(j)] +
                     spec.classes[cls].sd_scale * rng.normal();
      if (spec.lowrank_rank > 0) value += loadings.row(j).dot(z);
      for (const auto& e : spec.visit1_effects) {
        const bool in_stratum = e.axis == "activity" ? active : median_sleep;
        if (!in_stratum) continue;
        for (int target : e.biomarkers) {
          if (target == j) value += e.effect;
        }
      }
      truth.visit1_complete(static_cast<Index>(i), j) = value;
      table.features(static_cast<Index>(i), j) = value;
    }
    table.features(static_cast<Index>(i), m + 0) = moderate;
    table.features(static_cast<Index>(i), m + 1) = vigorous;
    table.features(static_cast<Index>(i), m + 2) = sleep;
    table.features(static_cast<Index>(i), m + 3) = steps;
  }

  // Row-level missingness: a hit row gets 1-3 null feature cells.
  if (spec.missingness > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() >= spec.missingness) continue;
      const int holes = 1 + static_cast<int>(rng.below(3));
      for (int h = 0; h < holes; ++h) {
        const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n_features)));
        table.features(static_cast<Index>(i), j) = std::nan("");
      }
    }
  }

  // Reference ranges from the first healthy class's marginal spread.
  std::size_t core = 0;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) {
    if (spec.classes[c].emitted_code == kRawHealthyCode) {
      core = c;
      break;
    }
  }
  for (int j = 0; j < m; ++j) {
    const double lowrank_var = loadings.row(j).squaredNorm();
    const double sd = std::sqrt(spec.classes[core].sd_scale * spec.classes[core].sd_scale +
                                lowrank_var);
    const double center = class_mean[core][static_cast<std::size_t>(j)];
    const double half = spec.range_sd_multiplier * sd;
    out.ranges.low_high[biomarkers[static_cast<std::size_t>(j)]] = {center - half, center + half};
  }
  return out;
}

CohortTable generate_followup(const GeneratorSpec& spec, const CohortTable& visit1,
                              GroundTruth& truth) {
  spec.validate();
  if (truth.visit1_complete.rows() != visit1.n_rows()) {
    throw StateError("generate_followup: ground truth does not match the visit-1 table");
  }
  Rng rng = Rng(spec.seed).derive("generate_followup");
  const auto n = static_cast<std::size_t>(visit1.n_rows());
  const int m = spec.n_biomarkers;

  std::unordered_map<std::string, std::size_t> class_of;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) class_of[spec.classes[c].name] = c;
  std::vector<std::vector<double>> class_mean;
  for (std::size_t c = 0; c < spec.classes.size(); ++c) class_mean.push_back(resolved_mean(spec, c));

  truth.noiseless_followup.resize(static_cast<Index>(n), m);
  std::vector<Index> selected;
  std::vector<double> elapsed_all(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool take = rng.uniform() < spec.followup_fraction;
    const double elapsed = rng.uniform(2.0, 5.0);
    elapsed_all[i] = elapsed;

    const auto cls = static_cast<std::size_t>(truth.class_index[i]);
    for (int j = 0; j < m; ++j) {
      double value = spec.followup_alpha * truth.visit1_complete(static_cast<Index>(i), j) +
                     spec.followup_gamma * class_mean[cls][static_cast<std::size_t>(j)];
      for (const auto& e : spec.followup_effects) {
        const bool in_stratum =
            e.axis == "activity" ? truth.true_active[i] != 0 : truth.true_median_sleep[i] != 0;
        if (!in_stratum) continue;
        for (int target : e.biomarkers) {
          if (target == j) value += e.effect;
        }
      }
      truth.noiseless_followup(static_cast<Index>(i), j) = value;
    }
    if (take) selected.push_back(static_cast<Index>(i));
  }

  CohortTable followup;
  followup.feature_names = visit1.feature_names;
  followup.features.resize(static_cast<Index>(selected.size()), visit1.features.cols());
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const auto i = static_cast<std::size_t>(selected[k]);
    followup.ids.push_back(visit1.ids[i]);
    followup.sex.push_back(visit1.sex[i]);
    followup.age.push_back(visit1.age[i] + elapsed_all[i]);
    followup.visit_index.push_back(2);
    followup.elapsed_years.push_back(elapsed_all[i]);
    followup.condition.push_back(visit1.condition[i]);
    for (int j = 0; j < m; ++j) {
      followup.features(static_cast<Index>(k), j) =
          truth.noiseless_followup(selected[k], j) + spec.followup_noise_sd * rng.normal();
    }
    // Lifestyle columns carried over from visit 1.
    for (Index j = m; j < visit1.features.cols(); ++j) {
      followup.features(static_cast<Index>(k), j) = visit1.features(selected[k], j);
    }
  }
  return followup;
}

void save_ground_truth(const std::string& path, const CohortTable& visit1,
                       const GroundTruth& truth, const std::vector<std::string>& biomarkers) {
  std::string out = "id,true_class";
  for (const auto& name : biomarkers) out += ",nf_" + name;
  out += '\n';
  for (Index i = 0; i < visit1.n_rows(); ++i) {
    const auto r = static_cast<std::size_t>(i);
    out += visit1.ids[r] + "," + truth.true_class[r];
    for (Index j = 0; j < truth.noiseless_followup.cols(); ++j) {
      out += ',';
      out += format_cell(truth.noiseless_followup(i, j));
    }
    out += '\n';
  }
  write_lines(path, out);
}

}  // namespace tcemb
