#include "tcemb/trainer.hpp"

#include <chrono>
#include <cmath>

#include "tcemb/csv.hpp"
#include "tcemb/error.hpp"
#include "tcemb/rng.hpp"

namespace tcemb {

void TrainConfig::validate() const {
  if (margin <= 0.0) throw ConfigError("train: margin must be positive");
  if (dim <= 0) throw ConfigError("train: embedding dim must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("train: dropout outside [0,1)");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("train: hidden widths must be positive");
  }
  schedule.validate();
}

void write_train_log_csv(const std::string& path, const TrainLog& log) {
  std::string out = "epoch,train_loss,val_loss,lr,seconds\n";
  for (const auto& e : log.entries) {
    out += std::to_string(e.epoch) + "," + format_cell(e.train_loss) + "," +
           format_cell(e.val_loss) + "," + format_cell(e.lr) + "," + format_cell(e.seconds) + "\n";
  }
  write_lines(path, out);
}

TripletBatch gather_triplet_batch(const Eigen::Ref<const Mat>& embeddings,
                                  const TripletSet& triplets, std::size_t begin, std::size_t end) {
  if (begin >= end || end > triplets.size()) throw DimError("gather_triplet_batch: bad slice");
  const auto b = static_cast<Index>(end - begin);
  TripletBatch batch;
  batch.anchor.resize(b, embeddings.cols());
  batch.positive.resize(b, embeddings.cols());
  batch.negative.resize(b, embeddings.cols());
  for (std::size_t i = begin; i < end; ++i) {
    const auto& t = triplets.triplets[i];
    const auto row = static_cast<Index>(i - begin);
    batch.anchor.row(row) = embeddings.row(t.anchor);
    batch.positive.row(row) = embeddings.row(t.positive);
    batch.negative.row(row) = embeddings.row(t.negative);
  }
  return batch;
}

namespace {

void check_triplet_indices(const TripletSet& triplets, Index n_rows) {
  for (const auto& t : triplets.triplets) {
    if (t.anchor < 0 || t.anchor >= n_rows || t.positive < 0 || t.positive >= n_rows ||
        t.negative < 0 || t.negative >= n_rows) {
      throw DataError("trainer: triplet index outside the feature table");
    }
  }
}

// Stacks the three roles of a batch of triplets into one matrix so a
// single forward/backward pass runs the shared weights.
Mat stack_triplet_rows(const Eigen::Ref<const Mat>& features, const TripletSet& triplets,
                       const std::vector<std::size_t>& order, std::size_t begin,
                       std::size_t end) {
  const auto b = static_cast<Index>(end - begin);
  Mat stacked(3 * b, features.cols());
  for (std::size_t i = begin; i < end; ++i) {
    const auto& t = triplets.triplets[order[i]];
    const auto row = static_cast<Index>(i - begin);
    stacked.row(row) = features.row(t.anchor);
    stacked.row(b + row) = features.row(t.positive);
    stacked.row(2 * b + row) = features.row(t.negative);
  }
  return stacked;
}

}  // namespace

TrainResult train_embedding_model(const Eigen::Ref<const Mat>& train_features,
                                  const TripletSet& triplets, const TrainConfig& config,
                                  const Mat* val_features, const TripletSet* val_triplets) {
  config.validate();
  if (triplets.size() == 0) throw DataError("trainer: empty triplet set");
  check_triplet_indices(triplets, train_features.rows());
  if (val_triplets != nullptr) {
    if (val_features == nullptr) throw StateError("trainer: validation triplets without features");
    check_triplet_indices(*val_triplets, val_features->rows());
  }

  Rng root(config.seed);
  Rng init_rng = root.derive("init");
  Rng shuffle_rng = root.derive("shuffle");
  Rng dropout_rng = root.derive("dropout");

  std::vector<int> widths;
  widths.push_back(static_cast<int>(train_features.cols()));
  for (int h : config.hidden) widths.push_back(h);
  widths.push_back(config.dim);

  TrainResult result;
  result.model.params = MlpParams::init(widths, init_rng);
  AdamState state = AdamState::init(result.model.params, config.schedule.initial);

  std::vector<std::size_t> order(triplets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    state.lr = lr_at_epoch(config.schedule, epoch);
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
      const std::size_t end = std::min(begin + batch_size, order.size());
      const auto b = static_cast<Index>(end - begin);
      const Mat stacked = stack_triplet_rows(train_features, triplets, order, begin, end);
      auto fwd = mlp_forward(result.model.params, stacked, config.dropout, true, &dropout_rng);

      TripletBatch batch;
      batch.anchor = fwd.embeddings.topRows(b);
      batch.positive = fwd.embeddings.middleRows(b, b);
      batch.negative = fwd.embeddings.bottomRows(b);

      const LossReport report = evaluate_loss(config.loss, batch, config.margin);
      if (!std::isfinite(report.total)) {
        throw NumericError("trainer: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(begin / batch_size) + " (hinge " +
                           std::to_string(report.mean_hinge) + ", reg " +
                           std::to_string(report.mean_reg) + ")");
      }
      loss_sum += report.total * static_cast<double>(b);

      const TripletGrads grads = loss_gradients(batch, config.margin, config.loss);
      Mat upstream(3 * b, config.dim);
      upstream.topRows(b) = grads.anchor;
      upstream.middleRows(b, b) = grads.positive;
      upstream.bottomRows(b) = grads.negative;

      const MlpGrads param_grads = mlp_backward(result.model.params, fwd.tape, upstream);
      adam_step(result.model.params, param_grads, state);
    }

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    entry.lr = state.lr;
    entry.val_loss = val_triplets != nullptr
                         ? validation_loss(result.model, *val_features, *val_triplets,
                                           config.loss, config.margin)
                         : std::nan("");
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.log.entries.push_back(entry);
  }
  return result;
}

Mat embed(const EmbeddingModel& model, const Eigen::Ref<const Mat>& features) {
  return mlp_infer(model.params, features);
}

double validation_loss(const EmbeddingModel& model, const Eigen::Ref<const Mat>& features,
                       const TripletSet& triplets, LossKind kind, double margin) {
  if (triplets.size() == 0) throw DataError("validation_loss: empty triplet set");
  check_triplet_indices(triplets, features.rows());
  const Mat embeddings = embed(model, features);
  const TripletBatch batch = gather_triplet_batch(embeddings, triplets, 0, triplets.size());
  return evaluate_loss(kind, batch, margin).total;
}

}  // namespace tcemb
