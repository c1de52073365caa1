#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tcemb/cohort.hpp"
#include "tcemb/metric_loss.hpp"
#include "tcemb/mlp.hpp"
#include "tcemb/optim.hpp"

namespace tcemb {

struct TrainConfig {
  LossKind loss = LossKind::kProposed;
  double margin = 1.0;  // hinge margin
  int dim = 32;         // embedding width
  std::vector<int> hidden = {512, 256};
  double dropout = 0.1;
  LrSchedule schedule;  // initial 1e-3, decay 0.95 every 50 epochs from 500 to 800
  int epochs = 800;
  int batch_size = 256;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainLogEntry {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN without a validation set
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
};

void write_train_log_csv(const std::string& path, const TrainLog& log);

struct EmbeddingModel {
  MlpParams params;

  Index input_dim() const { return params.input_dim(); }
  Index output_dim() const { return params.output_dim(); }
};

struct TrainResult {
  EmbeddingModel model;
  TrainLog log;
};

/// Trains the shared-weight embedding network on triplet batches with
/// Adam and the exponential LR schedule. One epoch is one pass over the
/// (fixed) triplet set, reshuffled per epoch; the three triplet roles
/// run through a single parameter set. Deterministic under the config
/// seed. Aborts with NumericError on a non-finite loss.
TrainResult train_embedding_model(const Eigen::Ref<const Mat>& train_features,
                                  const TripletSet& triplets, const TrainConfig& config,
                                  const Mat* val_features = nullptr,
                                  const TripletSet* val_triplets = nullptr);

/// Inference-mode embeddings (dropout off).
Mat embed(const EmbeddingModel& model, const Eigen::Ref<const Mat>& features);

/// Configured loss over a triplet set at inference weights.
double validation_loss(const EmbeddingModel& model, const Eigen::Ref<const Mat>& features,
                       const TripletSet& triplets, LossKind kind, double margin);

/// Gathers anchor/positive/negative embedding rows for a slice of a
/// triplet set (used by the trainer and by loss evaluation).
TripletBatch gather_triplet_batch(const Eigen::Ref<const Mat>& embeddings,
                                  const TripletSet& triplets, std::size_t begin, std::size_t end);

}  // namespace tcemb
