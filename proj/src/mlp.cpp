#include "tcemb/mlp.hpp"

#include <cmath>
#include <string>

#include "tcemb/error.hpp"

namespace tcemb {

void MlpParams::validate() const {
  if (layers.empty()) throw DimError("MlpParams: no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.bias.size() != l.out_dim() || l.slope.size() != l.out_dim()) {
      throw DimError("MlpParams: bias/slope length mismatch at layer " + std::to_string(k));
    }
    if (k + 1 < layers.size() && l.out_dim() != layers[k + 1].in_dim()) {
      throw DimError("MlpParams: layer widths do not chain at layer " + std::to_string(k));
    }
  }
}

MlpParams MlpParams::init(const std::vector<int>& widths, Rng& rng) {
  if (widths.size() < 2) throw DimError("MlpParams::init: need at least input and output width");
  MlpParams params;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const int fan_in = widths[k];
    const int fan_out = widths[k + 1];
    if (fan_in <= 0 || fan_out <= 0) throw DimError("MlpParams::init: widths must be positive");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    MlpLayer layer;
    layer.weight.resize(fan_in, fan_out);
    for (Index i = 0; i < layer.weight.rows(); ++i) {
      for (Index j = 0; j < layer.weight.cols(); ++j) {
        layer.weight(i, j) = rng.uniform(-bound, bound);
      }
    }
    layer.bias = Vec::Zero(fan_out);
    layer.slope = Vec::Constant(fan_out, 0.25);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

void MlpGrads::add_scaled(const MlpGrads& other, double scale) {
  if (layers.size() != other.layers.size()) throw DimError("MlpGrads: layer count mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    layers[k].weight += scale * other.layers[k].weight;
    layers[k].bias += scale * other.layers[k].bias;
    layers[k].slope += scale * other.layers[k].slope;
  }
}

Mat prelu(const Eigen::Ref<const Mat>& x, const Eigen::Ref<const Vec>& slopes) {
  if (slopes.size() != x.cols()) throw DimError("prelu: slope length != column count");
  Mat out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const double s = slopes[j];
    out.col(j) = (x.col(j).array() > 0.0).select(x.col(j), s * x.col(j));
  }
  return out;
}

ForwardResult mlp_forward(const MlpParams& params, const Eigen::Ref<const Mat>& x,
                          double dropout_p, bool training, Rng* rng) {
  params.validate();
  if (x.cols() != params.input_dim()) {
    throw DimError("mlp_forward: input width " + std::to_string(x.cols()) + " != layer width " +
                   std::to_string(params.input_dim()));
  }
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw NumericError("mlp_forward: dropout_p outside [0,1)");
  if (!all_finite(x)) throw NumericError("mlp_forward: non-finite input");
  if (training && dropout_p > 0.0 && rng == nullptr) {
    throw StateError("mlp_forward: training dropout requires an rng");
  }

  ForwardResult result;
  ForwardTape& tape = result.tape;
  tape.input = x;
  tape.dropout_p = dropout_p;
  tape.training = training;

  const std::size_t n_layers = params.layers.size();
  Mat cur = x;
  for (std::size_t k = 0; k < n_layers; ++k) {
    const MlpLayer& layer = params.layers[k];
    Mat z = cur * layer.weight;
    z.rowwise() += layer.bias.transpose();
    Mat a = prelu(z, layer.slope);
    Mat mask;
    const bool apply_dropout = training && dropout_p > 0.0 && k + 1 < n_layers;
    if (apply_dropout) {
      const double keep_scale = 1.0 / (1.0 - dropout_p);
      mask.resize(a.rows(), a.cols());
      for (Index i = 0; i < mask.rows(); ++i) {
        for (Index j = 0; j < mask.cols(); ++j) {
          mask(i, j) = rng->uniform() < dropout_p ? 0.0 : keep_scale;
        }
      }
      a = a.cwiseProduct(mask);
    }
    tape.pre_act.push_back(std::move(z));
    tape.dropout_mask.push_back(std::move(mask));
    tape.post.push_back(a);
    cur = std::move(a);
  }
  if (!all_finite(cur)) throw NumericError("mlp_forward: non-finite embeddings");
  result.embeddings = cur;
  return result;
}

Mat mlp_infer(const MlpParams& params, const Eigen::Ref<const Mat>& x) {
  return mlp_forward(params, x, 0.0, false, nullptr).embeddings;
}

MlpGrads mlp_backward(const MlpParams& params, const ForwardTape& tape,
                      const Eigen::Ref<const Mat>& upstream) {
  params.validate();
  if (tape.pre_act.size() != params.layers.size()) {
    throw StateError("mlp_backward: tape layer count does not match params");
  }
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    if (tape.pre_act[k].cols() != params.layers[k].out_dim()) {
      throw StateError("mlp_backward: tape shapes do not match params");
    }
  }
  if (upstream.rows() != tape.input.rows() || upstream.cols() != params.output_dim()) {
    throw DimError("mlp_backward: upstream gradient shape mismatch");
  }

  MlpGrads grads;
  grads.layers.resize(params.layers.size());

  Mat g = upstream;  // gradient w.r.t. current layer output
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const MlpLayer& layer = params.layers[k];
    const Mat& z = tape.pre_act[k];
    const Mat& mask = tape.dropout_mask[k];

    if (mask.size() > 0) g = g.cwiseProduct(mask);

    // Through the activation: dz = g .* (z > 0 ? 1 : slope_j), and the
    // slope picks up sum_i g_ij * z_ij over the non-positive entries.
    Mat gz(z.rows(), z.cols());
    Vec gslope = Vec::Zero(layer.out_dim());
    for (Index j = 0; j < z.cols(); ++j) {
      const double s = layer.slope[j];
      double acc = 0.0;
      for (Index i = 0; i < z.rows(); ++i) {
        if (z(i, j) > 0.0) {
          gz(i, j) = g(i, j);
        } else {
          gz(i, j) = s * g(i, j);
          acc += g(i, j) * z(i, j);
        }
      }
      gslope[j] = acc;
    }

    const Mat& layer_input = (k == 0) ? tape.input : tape.post[k - 1];
    grads.layers[k].weight = layer_input.transpose() * gz;
    grads.layers[k].bias = gz.colwise().sum().transpose();
    grads.layers[k].slope = std::move(gslope);
    g = gz * layer.weight.transpose();
  }
  grads.input = std::move(g);
  return grads;
}

}  // namespace tcemb
