#include "tcemb/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tcemb/error.hpp"

namespace tcemb {

void GbtParams::validate() const {
  if (rounds < 1) throw ConfigError("gbt: rounds must be >= 1");
  if (depth < 1) throw ConfigError("gbt: depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ConfigError("gbt: learning rate outside (0,1]");
  }
}

namespace {

struct BuildNode {
  long count = 0;
  double sum = 0.0;
  int best_feature = -1;
  double best_threshold = 0.0;
  double best_gain = 0.0;
  int tree_index = -1;  // position in the emitted tree
};

// Per-(node, feature) sweep state while walking one presorted column.
struct SweepState {
  long count_left = 0;
  double sum_left = 0.0;
  double prev_value = 0.0;
  bool started = false;
};

// One regression tree on the residuals, grown level by level using the
// presorted feature orders. Gain is the decrease in summed squared
// error, computed from sum^2/count aggregates.
std::vector<GbtNode> fit_tree(const Eigen::Ref<const Mat>& x, const Vec& residual,
                              const std::vector<std::vector<int>>& sorted_order, int max_depth) {
  const auto n = static_cast<long>(x.rows());
  const int n_features = static_cast<int>(x.cols());
  constexpr double kMinGain = 1e-12;

  std::vector<GbtNode> tree;
  tree.push_back(GbtNode{});
  std::vector<int> node_of(static_cast<std::size_t>(n), 0);  // sample -> tree node, -1 settled

  std::vector<int> level_nodes = {0};
  for (int depth = 0; depth < max_depth && !level_nodes.empty(); ++depth) {
    // Aggregate per active node.
    std::vector<BuildNode> stats(level_nodes.size());
    std::vector<int> slot_of_node(tree.size(), -1);
    for (std::size_t s = 0; s < level_nodes.size(); ++s) {
      slot_of_node[static_cast<std::size_t>(level_nodes[s])] = static_cast<int>(s);
      stats[s].tree_index = level_nodes[s];
    }
    for (long i = 0; i < n; ++i) {
      const int nd = node_of[static_cast<std::size_t>(i)];
      if (nd < 0) continue;
      const int slot = slot_of_node[static_cast<std::size_t>(nd)];
      if (slot < 0) continue;
      stats[static_cast<std::size_t>(slot)].count += 1;
      stats[static_cast<std::size_t>(slot)].sum += residual[i];
    }

    // Scan every feature once per level; split candidates sit between
    // consecutive distinct values within a node's subsequence.
    std::vector<SweepState> sweep(level_nodes.size());
    for (int j = 0; j < n_features; ++j) {
      for (auto& s : sweep) s = SweepState{};
      for (int idx : sorted_order[static_cast<std::size_t>(j)]) {
        const int nd = node_of[static_cast<std::size_t>(idx)];
        if (nd < 0) continue;
        const int slot = slot_of_node[static_cast<std::size_t>(nd)];
        if (slot < 0) continue;
        auto& s = sweep[static_cast<std::size_t>(slot)];
        auto& node = stats[static_cast<std::size_t>(slot)];
        const double v = x(idx, j);
        if (s.started && v > s.prev_value && s.count_left > 0 && s.count_left < node.count) {
          const double sum_right = node.sum - s.sum_left;
          const long count_right = node.count - s.count_left;
          const double gain = s.sum_left * s.sum_left / static_cast<double>(s.count_left) +
                              sum_right * sum_right / static_cast<double>(count_right) -
                              node.sum * node.sum / static_cast<double>(node.count);
          if (gain > node.best_gain + kMinGain) {
            node.best_gain = gain;
            node.best_feature = j;
            node.best_threshold = 0.5 * (s.prev_value + v);
          }
        }
        s.count_left += 1;
        s.sum_left += residual[idx];
        s.prev_value = v;
        s.started = true;
      }
    }

    // Materialize splits, finalize leaves.
    std::vector<int> next_level;
    for (auto& node : stats) {
      GbtNode& emitted = tree[static_cast<std::size_t>(node.tree_index)];
      if (node.best_feature >= 0 && node.best_gain > kMinGain) {
        emitted.feature = node.best_feature;
        emitted.threshold = node.best_threshold;
        emitted.left = static_cast<int>(tree.size());
        emitted.right = static_cast<int>(tree.size() + 1);
        tree.push_back(GbtNode{});
        tree.push_back(GbtNode{});
        next_level.push_back(emitted.left);
        next_level.push_back(emitted.right);
      } else {
        emitted.feature = -1;
        emitted.value = node.count > 0 ? node.sum / static_cast<double>(node.count) : 0.0;
      }
    }
    for (long i = 0; i < n; ++i) {
      int& nd = node_of[static_cast<std::size_t>(i)];
      if (nd < 0) continue;
      const GbtNode& emitted = tree[static_cast<std::size_t>(nd)];
      if (emitted.feature < 0) {
        nd = -1;
      } else {
        nd = x(i, emitted.feature) <= emitted.threshold ? emitted.left : emitted.right;
      }
    }
    level_nodes = std::move(next_level);
  }

  // Depth limit reached: remaining active nodes become leaves.
  if (!level_nodes.empty()) {
    std::vector<long> counts(tree.size(), 0);
    std::vector<double> sums(tree.size(), 0.0);
    for (long i = 0; i < n; ++i) {
      const int nd = node_of[static_cast<std::size_t>(i)];
      if (nd < 0) continue;
      counts[static_cast<std::size_t>(nd)] += 1;
      sums[static_cast<std::size_t>(nd)] += residual[i];
    }
    for (int nd : level_nodes) {
      GbtNode& emitted = tree[static_cast<std::size_t>(nd)];
      emitted.feature = -1;
      emitted.value = counts[static_cast<std::size_t>(nd)] > 0
                          ? sums[static_cast<std::size_t>(nd)] /
                                static_cast<double>(counts[static_cast<std::size_t>(nd)])
                          : 0.0;
    }
  }
  return tree;
}

double tree_output(const std::vector<GbtNode>& tree, const Eigen::Ref<const Mat>& x, Index row) {
  int nd = 0;
  while (tree[static_cast<std::size_t>(nd)].feature >= 0) {
    const auto& node = tree[static_cast<std::size_t>(nd)];
    nd = x(row, node.feature) <= node.threshold ? node.left : node.right;
  }
  return tree[static_cast<std::size_t>(nd)].value;
}

}  // namespace

GbtModel gbt_fit(const Eigen::Ref<const Mat>& x, const Eigen::Ref<const Vec>& y,
                 const GbtParams& params) {
  params.validate();
  const Index n = x.rows();
  if (n != y.size()) throw DimError("gbt_fit: row count mismatch");
  if (n < 10) throw DataError("gbt_fit: need at least 10 training rows");

  GbtModel model;
  model.learning_rate = params.learning_rate;
  model.base = y.mean();
  if ((y.array() - model.base).abs().maxCoeff() == 0.0) {
    return model;  // constant target, zero trees
  }

  // Presort each feature once; ties resolve by row index.
  std::vector<std::vector<int>> sorted_order(static_cast<std::size_t>(x.cols()));
  for (Index j = 0; j < x.cols(); ++j) {
    auto& order = sorted_order[static_cast<std::size_t>(j)];
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = x(a, j);
      const double vb = x(b, j);
      return va < vb || (va == vb && a < b);
    });
  }

  Vec residual = y.array() - model.base;
  model.trees.reserve(static_cast<std::size_t>(params.rounds));
  for (int round = 0; round < params.rounds; ++round) {
    std::vector<GbtNode> tree = fit_tree(x, residual, sorted_order, params.depth);
    for (Index i = 0; i < n; ++i) {
      residual[i] -= params.learning_rate * tree_output(tree, x, i);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

Vec gbt_predict(const GbtModel& model, const Eigen::Ref<const Mat>& x) {
  Vec out = Vec::Constant(x.rows(), model.base);
  for (const auto& tree : model.trees) {
    for (Index i = 0; i < x.rows(); ++i) {
      out[i] += model.learning_rate * tree_output(tree, x, i);
    }
  }
  return out;
}

}  // namespace tcemb
