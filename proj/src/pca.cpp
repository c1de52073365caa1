#include "tcemb/pca.hpp"

#include <cmath>

#include "tcemb/error.hpp"
#include "tcemb/rng.hpp"

namespace tcemb {

PcaTransform pca_fit(const Eigen::Ref<const Mat>& rows, int k) {
  const Index n = rows.rows();
  const Index f = rows.cols();
  if (k <= 0 || k > f) throw DimError("pca_fit: k outside [1, feature count]");
  if (n < 2) throw DataError("pca_fit: need at least 2 rows");

  PcaTransform transform;
  transform.mean = rows.colwise().mean().transpose();
  const Mat centered = rows.rowwise() - transform.mean.transpose();
  Mat cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const double trace = cov.trace();
  if (trace <= 0.0) throw DataError("pca_fit: zero-variance data");

  transform.components.resize(k, f);
  transform.explained_share.resize(k);

  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 20000;
  Rng start_rng(0x9ca0f17e);
  for (int comp = 0; comp < k; ++comp) {
    Vec v(f);
    for (Index j = 0; j < f; ++j) v[j] = start_rng.normal();
    // Keep the iterate orthogonal to the components already found.
    auto orthogonalize = [&](Vec& w) {
      for (int prev = 0; prev < comp; ++prev) {
        const Vec p = transform.components.row(prev).transpose();
        w -= p.dot(w) * p;
      }
    };
    orthogonalize(v);
    if (v.norm() == 0.0) throw DataError("pca_fit: k exceeds the data rank");
    v.normalize();

    double eigenvalue = 0.0;
    for (int iter = 0; iter < kMaxIter; ++iter) {
      Vec w = cov * v;
      orthogonalize(w);
      const double norm = w.norm();
      if (norm <= trace * 1e-14) {
        throw DataError("pca_fit: k exceeds the data rank");
      }
      w /= norm;
      if (w.dot(v) < 0.0) w = -w;
      const double delta = (w - v).norm();
      v = w;
      eigenvalue = v.dot(cov * v);
      if (delta < kTol) break;
    }
    if (eigenvalue <= trace * 1e-12) {
      throw DataError("pca_fit: k exceeds the data rank");
    }
    // Deterministic sign: largest-magnitude coordinate positive.
    Index arg_max = 0;
    v.cwiseAbs().maxCoeff(&arg_max);
    if (v[arg_max] < 0.0) v = -v;
    transform.components.row(comp) = v.transpose();
    transform.explained_share[comp] = eigenvalue / trace;
    cov -= eigenvalue * v * v.transpose();
  }
  return transform;
}

Mat pca_apply(const PcaTransform& transform, const Eigen::Ref<const Mat>& rows) {
  if (rows.cols() != transform.mean.size()) throw DimError("pca_apply: feature width mismatch");
  return (rows.rowwise() - transform.mean.transpose()) * transform.components.transpose();
}

}  // namespace tcemb
