#pragma once

#include "tcemb/types.hpp"

namespace tcemb {

/// Mean-centered projection onto the leading covariance eigenvectors,
/// computed by power iteration with deflation (tolerance 1e-10).
struct PcaTransform {
  Vec mean;
  Mat components;       // k x features, rows orthonormal
  Vec explained_share;  // eigenvalue / trace(covariance)
};

PcaTransform pca_fit(const Eigen::Ref<const Mat>& rows, int k);
Mat pca_apply(const PcaTransform& transform, const Eigen::Ref<const Mat>& rows);

}  // namespace tcemb
