#pragma once

#include <vector>

#include "tcemb/rng.hpp"
#include "tcemb/types.hpp"

namespace tcemb {

/// One fully connected layer: weight is (in x out), bias and the
/// per-unit PReLU slope have length out. The same struct doubles as a
/// gradient holder since it mirrors the parameter shapes exactly.
struct MlpLayer {
  Mat weight;
  Vec bias;
  Vec slope;

  Index in_dim() const { return weight.rows(); }
  Index out_dim() const { return weight.cols(); }
};

/// Parameters of the embedding network. Layers chain: the output width
/// of layer k equals the input width of layer k+1.
struct MlpParams {
  std::vector<MlpLayer> layers;

  Index input_dim() const { return layers.front().in_dim(); }
  Index output_dim() const { return layers.back().out_dim(); }

  /// Throws DimError if the layer shapes do not chain or slope/bias
  /// lengths disagree with the layer widths.
  void validate() const;

  /// Glorot-uniform weights, zero biases, PReLU slopes 0.25.
  static MlpParams init(const std::vector<int>& widths, Rng& rng);
};

/// Gradients of a traced forward pass: one MlpLayer-shaped entry per
/// layer plus the gradient with respect to the input batch.
struct MlpGrads {
  std::vector<MlpLayer> layers;
  Mat input;

  void add_scaled(const MlpGrads& other, double scale);
};

/// Record of one forward pass, consumed by mlp_backward. Holds the
/// pre-activations and the scaled dropout masks actually drawn.
struct ForwardTape {
  Mat input;
  std::vector<Mat> pre_act;       // z_k = x_k * W_k + b_k
  std::vector<Mat> post;          // layer output after activation (+ dropout)
  std::vector<Mat> dropout_mask;  // scaled masks; empty matrix where none applied
  double dropout_p = 0.0;
  bool training = false;
};

struct ForwardResult {
  Mat embeddings;
  ForwardTape tape;
};

/// out[i,j] = x[i,j] if positive, else slopes[j] * x[i,j].
Mat prelu(const Eigen::Ref<const Mat>& x, const Eigen::Ref<const Vec>& slopes);

/// Forward pass through all layers. Dropout is applied after every
/// activation except the last one, with inverted scaling (kept units
/// divided by 1 - p) so inference needs no rescaling. With
/// training=false the pass is deterministic and rng may be null.
ForwardResult mlp_forward(const MlpParams& params, const Eigen::Ref<const Mat>& x,
                          double dropout_p, bool training, Rng* rng);

/// Inference-only forward: no tape, no dropout.
Mat mlp_infer(const MlpParams& params, const Eigen::Ref<const Mat>& x);

/// Exact gradients of the traced computation with respect to every
/// parameter and the input. upstream is d(loss)/d(embeddings).
MlpGrads mlp_backward(const MlpParams& params, const ForwardTape& tape,
                      const Eigen::Ref<const Mat>& upstream);

}  // namespace tcemb
