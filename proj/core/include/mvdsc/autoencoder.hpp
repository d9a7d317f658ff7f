#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <variant>
#include <vector>

namespace mvdsc {

/// Per-sample feature-map shape. Dense layers use {1, 1, width}.
struct TensorShape {
  int channels = 1;
  int height = 1;
  int width = 1;

  int size() const { return channels * height * width; }
  bool operator==(const TensorShape&) const = default;
};

/// 3x3 convolution with "same" zero padding. When `transposed` is set the
/// layer applies the exact adjoint map (stride-2 upsampling back onto a
/// caller-supplied target size), so transposed layers invert the shape
/// arithmetic of their mirror encoder layer for any input size.
struct ConvLayer {
  static constexpr int kKernel = 3;

  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  bool transposed = false;
  Eigen::VectorXd kernels;  // flattened (out, in, ky, kx)

  double& at(int o, int i, int ky, int kx) {
    return kernels[((o * in_channels + i) * kKernel + ky) * kKernel + kx];
  }
  double at(int o, int i, int ky, int kx) const {
    return kernels[((o * in_channels + i) * kKernel + ky) * kKernel + kx];
  }
};

/// Fully connected layer; bias is optional and unused by the
/// auto-encoders, which are kept purely linear-plus-rectifier.
struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // size 0 when absent

  bool has_bias() const { return bias.size() > 0; }
};

using Layer = std::variant<ConvLayer, DenseLayer>;

int layer_param_count(const Layer& layer);
Eigen::VectorXd layer_params(const Layer& layer);
void set_layer_params(Layer& layer, const Eigen::VectorXd& flat);

/// Architecture description from which parameters are initialized.
/// `widths` lists encoder output channels (convolutional) or layer widths
/// (dense); the decoder mirrors them back to the input shape.
struct AutoencoderSpec {
  bool convolutional = false;
  TensorShape input;
  std::vector<int> widths;
  std::vector<int> strides;  // convolutional only; defaults to all 2

  static AutoencoderSpec conv(TensorShape input, std::vector<int> channels = {64, 32, 16},
                              std::vector<int> strides = {});
  static AutoencoderSpec dense(int input_dim, std::vector<int> widths = {});
};

struct AutoencoderParams {
  std::vector<Layer> encoder;
  std::vector<Layer> decoder;
  TensorShape input;

  int n_params() const;
};

/// He-scaled initialization: zero-mean normals with std sqrt(2 / fan_in),
/// fan_in = 9 * in_channels for 3x3 kernels and in_dim for dense layers.
/// Deterministic per seed.
AutoencoderParams init_params(const AutoencoderSpec& spec, std::uint64_t seed);

struct LayerCache {
  Eigen::MatrixXd input;  // layer input, flattened columns
  Eigen::MatrixXd pre;    // pre-activation output
  TensorShape in_shape;
  TensorShape out_shape;
  bool activated = false;  // rectifier applied after this layer
};

/// Activations retained by a forward pass for the matching backward pass.
/// A cache belongs to one (params, input) pair and is never shared.
struct ForwardCache {
  std::vector<LayerCache> encoder;
  std::vector<LayerCache> decoder;
  TensorShape latent_shape;
};

/// Runs the encoder; columns of the result are flattened latent maps.
Eigen::MatrixXd encode(const AutoencoderParams& params, const Eigen::MatrixXd& x,
                       ForwardCache& cache);

/// Runs the decoder on a latent batch. Requires the cache of the matching
/// encode call: transposed layers take their target sizes from it, which
/// is what lands the output exactly on the encoder input shape.
Eigen::MatrixXd decode(const AutoencoderParams& params, const Eigen::MatrixXd& latent,
                       ForwardCache& cache);

struct Gradients {
  std::vector<Eigen::VectorXd> encoder;  // flat, same layout as layer_params
  std::vector<Eigen::VectorXd> decoder;
  Eigen::MatrixXd input;  // d(loss)/d(x)
};

/// Exact reverse-mode gradients for a scalar loss with upstream gradients
/// d_recon (w.r.t. the decoder output) and d_latent (w.r.t. the encoder
/// output; pass an empty matrix when the loss has no direct latent term).
/// Assumes the decoder consumed the encoder output unchanged; when a
/// self-expression layer sits at the junction, use the split halves below
/// and chain through it.
Gradients backward(const AutoencoderParams& params, const ForwardCache& cache,
                   const Eigen::MatrixXd& d_recon, const Eigen::MatrixXd& d_latent);

struct DecoderGradients {
  std::vector<Eigen::VectorXd> layers;
  Eigen::MatrixXd input;  // d(loss)/d(decoder input)
};

struct EncoderGradients {
  std::vector<Eigen::VectorXd> layers;
  Eigen::MatrixXd input;  // d(loss)/d(x)
};

DecoderGradients backward_decoder(const AutoencoderParams& params, const ForwardCache& cache,
                                  const Eigen::MatrixXd& d_recon);

EncoderGradients backward_encoder(const AutoencoderParams& params, const ForwardCache& cache,
                                  const Eigen::MatrixXd& d_latent);

}  // namespace mvdsc
