#pragma once

#include <string>

#include "tcemb/types.hpp"

namespace tcemb {

enum class LossKind { kProposed, kTriplet, kSwap };

LossKind loss_kind_from_string(const std::string& name);
std::string to_string(LossKind kind);

/// Embeddings of a batch of triplets. Row i of each matrix holds one
/// triplet's anchor, positive and negative embedding.
struct TripletBatch {
  Mat anchor;
  Mat positive;
  Mat negative;

  Index size() const { return anchor.rows(); }
  Index dim() const { return anchor.cols(); }
  void validate() const;
};

/// Per-batch loss breakdown. total = mean_hinge + mean_reg, and the
/// three distance vectors hold the per-triplet anchor-positive,
/// anchor-negative and positive-negative Euclidean distances.
struct LossReport {
  double total = 0.0;
  double mean_hinge = 0.0;
  double mean_reg = 0.0;
  Vec dist_ap;
  Vec dist_an;
  Vec dist_pn;
  double margin = 0.0;
};

double euclidean_distance(const Eigen::Ref<const Vec>& u, const Eigen::Ref<const Vec>& v);

/// Hinge objective: mean of [d(a,p) - d(a,n) + margin]^+ over the batch.
LossReport triplet_loss(const TripletBatch& batch, double margin);

/// Hinge plus the squared regularizer (d(p,n) - d(a,n))^2, averaged over
/// the batch. Zero exactly when every triplet has d(p,n) = d(a,n) and
/// d(a,n) >= d(a,p) + margin.
LossReport proposed_loss(const TripletBatch& batch, double margin);

/// Distance-swap baseline: the hinge subtracts min(d(a,n), d(p,n)).
LossReport swap_triplet_loss(const TripletBatch& batch, double margin);

LossReport evaluate_loss(LossKind kind, const TripletBatch& batch, double margin);

struct TripletGrads {
  Mat anchor;
  Mat positive;
  Mat negative;
};

/// Exact subgradients of the selected loss with respect to the three
/// embedding matrices. At the hinge kink the inactive-side subgradient
/// (zero) is used; a zero distance contributes a zero gradient.
TripletGrads loss_gradients(const TripletBatch& batch, double margin, LossKind kind);

}  // namespace tcemb
