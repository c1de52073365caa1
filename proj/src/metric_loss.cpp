#include "tcemb/metric_loss.hpp"

#include <algorithm>
#include <cmath>

#include "tcemb/error.hpp"

namespace tcemb {

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "proposed") return LossKind::kProposed;
  if (name == "triplet") return LossKind::kTriplet;
  if (name == "swap") return LossKind::kSwap;
  throw ConfigError("unknown loss selector: " + name + " (expected proposed|triplet|swap)");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kProposed: return "proposed";
    case LossKind::kTriplet: return "triplet";
    case LossKind::kSwap: return "swap";
  }
  return "?";
}

void TripletBatch::validate() const {
  if (anchor.rows() != positive.rows() || anchor.rows() != negative.rows() ||
      anchor.cols() != positive.cols() || anchor.cols() != negative.cols()) {
    throw DimError("TripletBatch: anchor/positive/negative shapes differ");
  }
  if (anchor.rows() == 0) throw DimError("TripletBatch: empty batch");
}

double euclidean_distance(const Eigen::Ref<const Vec>& u, const Eigen::Ref<const Vec>& v) {
  if (u.size() != v.size()) throw DimError("euclidean_distance: length mismatch");
  return (u - v).norm();
}

namespace {

void fill_distances(const TripletBatch& batch, LossReport& report) {
  const Index n = batch.size();
  report.dist_ap.resize(n);
  report.dist_an.resize(n);
  report.dist_pn.resize(n);
  for (Index i = 0; i < n; ++i) {
    report.dist_ap[i] = (batch.anchor.row(i) - batch.positive.row(i)).norm();
    report.dist_an[i] = (batch.anchor.row(i) - batch.negative.row(i)).norm();
    report.dist_pn[i] = (batch.positive.row(i) - batch.negative.row(i)).norm();
  }
}

LossReport reduce(const TripletBatch& batch, double margin, bool with_reg, bool swap) {
  if (margin <= 0.0) throw NumericError("loss: margin must be positive");
  batch.validate();
  LossReport report;
  report.margin = margin;
  fill_distances(batch, report);
  const Index n = batch.size();
  double hinge_sum = 0.0;
  double reg_sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double neg_ref =
        swap ? std::min(report.dist_an[i], report.dist_pn[i]) : report.dist_an[i];
    hinge_sum += std::max(report.dist_ap[i] - neg_ref + margin, 0.0);
    if (with_reg) {
      const double gap = report.dist_pn[i] - report.dist_an[i];
      reg_sum += gap * gap;
    }
  }
  report.mean_hinge = hinge_sum / static_cast<double>(n);
  report.mean_reg = reg_sum / static_cast<double>(n);
  report.total = report.mean_hinge + report.mean_reg;
  return report;
}

// Unit direction (u - v) / |u - v|, or zero at coincident points.
inline Eigen::RowVectorXd unit_diff(const Eigen::RowVectorXd& u, const Eigen::RowVectorXd& v,
                                    double dist) {
  if (dist <= 0.0) return Eigen::RowVectorXd::Zero(u.size());
  return (u - v) / dist;
}

}  // namespace

LossReport triplet_loss(const TripletBatch& batch, double margin) {
  return reduce(batch, margin, /*with_reg=*/false, /*swap=*/false);
}

LossReport proposed_loss(const TripletBatch& batch, double margin) {
  return reduce(batch, margin, /*with_reg=*/true, /*swap=*/false);
}

LossReport swap_triplet_loss(const TripletBatch& batch, double margin) {
  return reduce(batch, margin, /*with_reg=*/false, /*swap=*/true);
}

LossReport evaluate_loss(LossKind kind, const TripletBatch& batch, double margin) {
  switch (kind) {
    case LossKind::kProposed: return proposed_loss(batch, margin);
    case LossKind::kTriplet: return triplet_loss(batch, margin);
    case LossKind::kSwap: return swap_triplet_loss(batch, margin);
  }
  throw ConfigError("evaluate_loss: bad kind");
}

TripletGrads loss_gradients(const TripletBatch& batch, double margin, LossKind kind) {
  if (margin <= 0.0) throw NumericError("loss_gradients: margin must be positive");
  batch.validate();
  const Index n = batch.size();
  const Index d = batch.dim();
  TripletGrads grads;
  grads.anchor = Mat::Zero(n, d);
  grads.positive = Mat::Zero(n, d);
  grads.negative = Mat::Zero(n, d);
  const double inv_n = 1.0 / static_cast<double>(n);

  for (Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd a = batch.anchor.row(i);
    const Eigen::RowVectorXd p = batch.positive.row(i);
    const Eigen::RowVectorXd q = batch.negative.row(i);
    const double d_ap = (a - p).norm();
    const double d_an = (a - q).norm();
    const double d_pn = (p - q).norm();
    const Eigen::RowVectorXd u_ap = unit_diff(a, p, d_ap);
    const Eigen::RowVectorXd u_an = unit_diff(a, q, d_an);
    const Eigen::RowVectorXd u_pn = unit_diff(p, q, d_pn);

    if (kind == LossKind::kSwap) {
      const double neg_ref = std::min(d_an, d_pn);
      if (d_ap - neg_ref + margin > 0.0) {
        if (d_an <= d_pn) {
          grads.anchor.row(i) += inv_n * (u_ap - u_an);
          grads.positive.row(i) += inv_n * (-u_ap);
          grads.negative.row(i) += inv_n * u_an;
        } else {
          grads.anchor.row(i) += inv_n * u_ap;
          grads.positive.row(i) += inv_n * (-u_ap - u_pn);
          grads.negative.row(i) += inv_n * u_pn;
        }
      }
      continue;
    }

    if (d_ap - d_an + margin > 0.0) {
      grads.anchor.row(i) += inv_n * (u_ap - u_an);
      grads.positive.row(i) += inv_n * (-u_ap);
      grads.negative.row(i) += inv_n * u_an;
    }
    if (kind == LossKind::kProposed) {
      const double gap = d_pn - d_an;
      grads.anchor.row(i) += inv_n * (-2.0 * gap) * u_an;
      grads.positive.row(i) += inv_n * (2.0 * gap) * u_pn;
      grads.negative.row(i) += inv_n * (2.0 * gap) * (u_an - u_pn);
    }
  }
  return grads;
}

}  // namespace tcemb
