#include "mvdsc/autoencoder.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "mvdsc/rng.hpp"

namespace mvdsc {

namespace {

constexpr int kK = ConvLayer::kKernel;

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Zero padding of the strided "same" scheme: fine is the larger grid the
// kernel slides over, coarse the stride-decimated one.
int pad_begin(int fine, int coarse, int stride) {
  return std::max((coarse - 1) * stride + kK - fine, 0) / 2;
}

int flat_index(const TensorShape& s, int c, int y, int x) {
  return (c * s.height + y) * s.width + x;
}

void conv_forward_sample(const ConvLayer& layer, const double* in, const TensorShape& is,
                         double* out, const TensorShape& os) {
  const int pt = pad_begin(is.height, os.height, layer.stride);
  const int pl = pad_begin(is.width, os.width, layer.stride);
  for (int o = 0; o < os.channels; ++o)
    for (int y = 0; y < os.height; ++y)
      for (int x = 0; x < os.width; ++x) {
        double acc = 0.0;
        for (int i = 0; i < is.channels; ++i)
          for (int dy = 0; dy < kK; ++dy) {
            const int sy = y * layer.stride + dy - pt;
            if (sy < 0 || sy >= is.height) continue;
            for (int dx = 0; dx < kK; ++dx) {
              const int sx = x * layer.stride + dx - pl;
              if (sx < 0 || sx >= is.width) continue;
              acc += layer.at(o, i, dy, dx) * in[flat_index(is, i, sy, sx)];
            }
          }
        out[flat_index(os, o, y, x)] = acc;
      }
}

void conv_backward_sample(const ConvLayer& layer, const double* in, const TensorShape& is,
                          const double* d_out, const TensorShape& os, double* d_kernels,
                          double* d_in) {
  const int pt = pad_begin(is.height, os.height, layer.stride);
  const int pl = pad_begin(is.width, os.width, layer.stride);
  for (int o = 0; o < os.channels; ++o)
    for (int y = 0; y < os.height; ++y)
      for (int x = 0; x < os.width; ++x) {
        const double g = d_out[flat_index(os, o, y, x)];
        for (int i = 0; i < is.channels; ++i)
          for (int dy = 0; dy < kK; ++dy) {
            const int sy = y * layer.stride + dy - pt;
            if (sy < 0 || sy >= is.height) continue;
            for (int dx = 0; dx < kK; ++dx) {
              const int sx = x * layer.stride + dx - pl;
              if (sx < 0 || sx >= is.width) continue;
              const int kidx = ((o * is.channels + i) * kK + dy) * kK + dx;
              d_kernels[kidx] += g * in[flat_index(is, i, sy, sx)];
              d_in[flat_index(is, i, sy, sx)] += layer.at(o, i, dy, dx) * g;
            }
          }
      }
}

// Adjoint of conv_forward_sample: scatters the coarse input onto the fine
// target grid. Output must be zeroed by the caller.
void transposed_forward_sample(const ConvLayer& layer, const double* in, const TensorShape& is,
                               double* out, const TensorShape& os) {
  const int pt = pad_begin(os.height, is.height, layer.stride);
  const int pl = pad_begin(os.width, is.width, layer.stride);
  for (int ic = 0; ic < is.channels; ++ic)
    for (int y = 0; y < is.height; ++y)
      for (int x = 0; x < is.width; ++x) {
        const double v = in[flat_index(is, ic, y, x)];
        for (int oc = 0; oc < os.channels; ++oc)
          for (int dy = 0; dy < kK; ++dy) {
            const int py = y * layer.stride + dy - pt;
            if (py < 0 || py >= os.height) continue;
            for (int dx = 0; dx < kK; ++dx) {
              const int px = x * layer.stride + dx - pl;
              if (px < 0 || px >= os.width) continue;
              out[flat_index(os, oc, py, px)] += layer.at(oc, ic, dy, dx) * v;
            }
          }
      }
}

void transposed_backward_sample(const ConvLayer& layer, const double* in, const TensorShape& is,
                                const double* d_out, const TensorShape& os, double* d_kernels,
                                double* d_in) {
  const int pt = pad_begin(os.height, is.height, layer.stride);
  const int pl = pad_begin(os.width, is.width, layer.stride);
  for (int ic = 0; ic < is.channels; ++ic)
    for (int y = 0; y < is.height; ++y)
      for (int x = 0; x < is.width; ++x) {
        const double v = in[flat_index(is, ic, y, x)];
        double acc = 0.0;
        for (int oc = 0; oc < os.channels; ++oc)
          for (int dy = 0; dy < kK; ++dy) {
            const int py = y * layer.stride + dy - pt;
            if (py < 0 || py >= os.height) continue;
            for (int dx = 0; dx < kK; ++dx) {
              const int px = x * layer.stride + dx - pl;
              if (px < 0 || px >= os.width) continue;
              const double g = d_out[flat_index(os, oc, py, px)];
              const int kidx = ((oc * is.channels + ic) * kK + dy) * kK + dx;
              d_kernels[kidx] += g * v;
              acc += layer.at(oc, ic, dy, dx) * g;
            }
          }
        d_in[flat_index(is, ic, y, x)] += acc;
      }
}

TensorShape conv_out_shape(const ConvLayer& layer, const TensorShape& in) {
  return {layer.out_channels, ceil_div(in.height, layer.stride), ceil_div(in.width, layer.stride)};
}

// Forward through one layer; `target` supplies the spatial size for
// transposed layers and is ignored otherwise.
Eigen::MatrixXd layer_forward(const Layer& layer, const Eigen::MatrixXd& input,
                              const TensorShape& in_shape, const TensorShape* target,
                              TensorShape& out_shape) {
  if (input.rows() != in_shape.size())
    throw std::invalid_argument("layer input rows (" + std::to_string(input.rows()) +
                                ") do not match shape size (" + std::to_string(in_shape.size()) + ")");
  const auto n = input.cols();

  if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
    if (in_shape.channels != conv->in_channels)
      throw std::invalid_argument("conv layer expects " + std::to_string(conv->in_channels) +
                                  " input channels, got " + std::to_string(in_shape.channels));
    if (conv->transposed) {
      if (target == nullptr) throw std::invalid_argument("transposed layer needs a target shape");
      out_shape = {conv->out_channels, target->height, target->width};
    } else {
      out_shape = conv_out_shape(*conv, in_shape);
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(out_shape.size(), n);
    for (Eigen::Index s = 0; s < n; ++s) {
      if (conv->transposed)
        transposed_forward_sample(*conv, input.col(s).data(), in_shape, out.col(s).data(), out_shape);
      else
        conv_forward_sample(*conv, input.col(s).data(), in_shape, out.col(s).data(), out_shape);
    }
    return out;
  }

  const auto& dense = std::get<DenseLayer>(layer);
  if (dense.weights.cols() != input.rows())
    throw std::invalid_argument("dense layer expects " + std::to_string(dense.weights.cols()) +
                                " inputs, got " + std::to_string(input.rows()));
  out_shape = {1, 1, static_cast<int>(dense.weights.rows())};
  Eigen::MatrixXd out = dense.weights * input;
  if (dense.has_bias()) out.colwise() += dense.bias;
  return out;
}

// Reverse-mode step through one layer: fills the flat parameter gradient
// and returns the gradient with respect to the layer input.
Eigen::MatrixXd layer_backward(const Layer& layer, const LayerCache& cache,
                               const Eigen::MatrixXd& d_pre, Eigen::VectorXd& d_params) {
  const auto n = d_pre.cols();

  if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
    d_params = Eigen::VectorXd::Zero(conv->kernels.size());
    Eigen::MatrixXd d_in = Eigen::MatrixXd::Zero(cache.input.rows(), n);
    for (Eigen::Index s = 0; s < n; ++s) {
      if (conv->transposed)
        transposed_backward_sample(*conv, cache.input.col(s).data(), cache.in_shape,
                                   d_pre.col(s).data(), cache.out_shape, d_params.data(),
                                   d_in.col(s).data());
      else
        conv_backward_sample(*conv, cache.input.col(s).data(), cache.in_shape,
                             d_pre.col(s).data(), cache.out_shape, d_params.data(),
                             d_in.col(s).data());
    }
    return d_in;
  }

  const auto& dense = std::get<DenseLayer>(layer);
  const Eigen::MatrixXd d_weights = d_pre * cache.input.transpose();
  d_params.resize(layer_param_count(layer));
  d_params.head(d_weights.size()) = Eigen::Map<const Eigen::VectorXd>(d_weights.data(), d_weights.size());
  if (dense.has_bias()) d_params.tail(dense.bias.size()) = d_pre.rowwise().sum();
  return dense.weights.transpose() * d_pre;
}

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& pre) {
  return (pre.array() > 0.0).cast<double>();
}

ConvLayer make_conv(int in_c, int out_c, int stride, bool transposed) {
  ConvLayer layer;
  layer.in_channels = in_c;
  layer.out_channels = out_c;
  layer.stride = stride;
  layer.transposed = transposed;
  layer.kernels = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out_c) * in_c * kK * kK);
  return layer;
}

DenseLayer make_dense(int in_dim, int out_dim) {
  DenseLayer layer;
  layer.weights = Eigen::MatrixXd::Zero(out_dim, in_dim);
  layer.bias = Eigen::VectorXd::Zero(out_dim);  // keeps rectifier units revivable
  return layer;
}

void he_fill(Layer& layer, Rng& rng) {
  if (auto* conv = std::get_if<ConvLayer>(&layer)) {
    const double std = std::sqrt(2.0 / (kK * kK * conv->in_channels));
    for (Eigen::Index i = 0; i < conv->kernels.size(); ++i) conv->kernels[i] = std * rng.normal();
  } else {
    auto& dense = std::get<DenseLayer>(layer);
    const double std = std::sqrt(2.0 / static_cast<double>(dense.weights.cols()));
    double* data = dense.weights.data();
    for (Eigen::Index i = 0; i < dense.weights.size(); ++i) data[i] = std * rng.normal();
    dense.bias.setZero();
  }
}

}  // namespace

int layer_param_count(const Layer& layer) {
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) return static_cast<int>(conv->kernels.size());
  const auto& dense = std::get<DenseLayer>(layer);
  return static_cast<int>(dense.weights.size() + dense.bias.size());
}

Eigen::VectorXd layer_params(const Layer& layer) {
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) return conv->kernels;
  const auto& dense = std::get<DenseLayer>(layer);
  Eigen::VectorXd flat(layer_param_count(layer));
  flat.head(dense.weights.size()) =
      Eigen::Map<const Eigen::VectorXd>(dense.weights.data(), dense.weights.size());
  if (dense.has_bias()) flat.tail(dense.bias.size()) = dense.bias;
  return flat;
}

void set_layer_params(Layer& layer, const Eigen::VectorXd& flat) {
  if (flat.size() != layer_param_count(layer))
    throw std::invalid_argument("set_layer_params: size mismatch");
  if (auto* conv = std::get_if<ConvLayer>(&layer)) {
    conv->kernels = flat;
    return;
  }
  auto& dense = std::get<DenseLayer>(layer);
  Eigen::Map<Eigen::VectorXd>(dense.weights.data(), dense.weights.size()) =
      flat.head(dense.weights.size());
  if (dense.has_bias()) dense.bias = flat.tail(dense.bias.size());
}

AutoencoderSpec AutoencoderSpec::conv(TensorShape input, std::vector<int> channels,
                                      std::vector<int> strides) {
  AutoencoderSpec spec;
  spec.convolutional = true;
  spec.input = input;
  spec.widths = std::move(channels);
  spec.strides = strides.empty() ? std::vector<int>(spec.widths.size(), 2) : std::move(strides);
  return spec;
}

AutoencoderSpec AutoencoderSpec::dense(int input_dim, std::vector<int> widths) {
  AutoencoderSpec spec;
  spec.convolutional = false;
  spec.input = {1, 1, input_dim};
  spec.widths = widths.empty()
                    ? std::vector<int>{std::min(input_dim, 64), std::min(input_dim, 32), std::min(input_dim, 16)}
                    : std::move(widths);
  return spec;
}

int AutoencoderParams::n_params() const {
  int total = 0;
  for (const auto& layer : encoder) total += layer_param_count(layer);
  for (const auto& layer : decoder) total += layer_param_count(layer);
  return total;
}

AutoencoderParams init_params(const AutoencoderSpec& spec, std::uint64_t seed) {
  if (spec.widths.empty()) throw std::invalid_argument("init_params: width list is empty");
  for (int w : spec.widths)
    if (w < 1) throw std::invalid_argument("init_params: widths must be positive");
  if (spec.input.size() < 1) throw std::invalid_argument("init_params: input shape is empty");
  if (spec.convolutional && spec.strides.size() != spec.widths.size())
    throw std::invalid_argument("init_params: need one stride per conv layer");

  const int depth = static_cast<int>(spec.widths.size());
  // dims[0] is the input channel count (conv) or input width (dense).
  std::vector<int> dims;
  dims.push_back(spec.convolutional ? spec.input.channels : spec.input.size());
  dims.insert(dims.end(), spec.widths.begin(), spec.widths.end());

  AutoencoderParams params;
  params.input = spec.input;
  for (int j = 0; j < depth; ++j) {
    if (spec.convolutional)
      params.encoder.emplace_back(make_conv(dims[j], dims[j + 1], spec.strides[static_cast<std::size_t>(j)], false));
    else
      params.encoder.emplace_back(make_dense(dims[j], dims[j + 1]));
  }
  for (int m = 0; m < depth; ++m) {
    const int in_dim = dims[static_cast<std::size_t>(depth - m)];
    const int out_dim = dims[static_cast<std::size_t>(depth - m - 1)];
    if (spec.convolutional)
      params.decoder.emplace_back(make_conv(in_dim, out_dim, spec.strides[static_cast<std::size_t>(depth - m - 1)], true));
    else
      params.decoder.emplace_back(make_dense(in_dim, out_dim));
  }

  Rng rng = Rng::derive(seed, 0x4145);
  for (auto& layer : params.encoder) he_fill(layer, rng);
  for (auto& layer : params.decoder) he_fill(layer, rng);
  return params;
}

Eigen::MatrixXd encode(const AutoencoderParams& params, const Eigen::MatrixXd& x,
                       ForwardCache& cache) {
  if (x.rows() != params.input.size())
    throw std::invalid_argument("encode: input rows (" + std::to_string(x.rows()) +
                                ") do not match configured shape (" + std::to_string(params.input.size()) + ")");
  cache.encoder.clear();
  cache.decoder.clear();

  TensorShape shape = params.input;
  Eigen::MatrixXd cur = x;
  for (const auto& layer : params.encoder) {
    LayerCache lc;
    lc.input = cur;
    lc.in_shape = shape;
    lc.pre = layer_forward(layer, cur, shape, nullptr, lc.out_shape);
    lc.activated = true;
    cur = lc.pre.cwiseMax(0.0);
    shape = lc.out_shape;
    cache.encoder.push_back(std::move(lc));
  }
  cache.latent_shape = shape;
  return cur;
}

Eigen::MatrixXd decode(const AutoencoderParams& params, const Eigen::MatrixXd& latent,
                       ForwardCache& cache) {
  if (cache.encoder.size() != params.encoder.size())
    throw std::invalid_argument("decode: cache does not match a completed encode pass");
  if (params.decoder.size() != params.encoder.size())
    throw std::invalid_argument("decode: encoder/decoder depth mismatch");
  if (latent.rows() != cache.latent_shape.size())
    throw std::invalid_argument("decode: latent rows (" + std::to_string(latent.rows()) +
                                ") do not match encoder output (" + std::to_string(cache.latent_shape.size()) + ")");
  cache.decoder.clear();

  const int depth = static_cast<int>(params.decoder.size());
  TensorShape shape = cache.latent_shape;
  Eigen::MatrixXd cur = latent;
  for (int m = 0; m < depth; ++m) {
    const TensorShape target = cache.encoder[static_cast<std::size_t>(depth - 1 - m)].in_shape;
    LayerCache lc;
    lc.input = cur;
    lc.in_shape = shape;
    lc.pre = layer_forward(params.decoder[static_cast<std::size_t>(m)], cur, shape, &target, lc.out_shape);
    lc.activated = (m != depth - 1);  // final reconstruction stays linear
    cur = lc.activated ? lc.pre.cwiseMax(0.0) : lc.pre;
    shape = lc.out_shape;
    cache.decoder.push_back(std::move(lc));
  }
  if (shape != params.input)
    throw std::logic_error("decode: reconstruction shape does not match the input shape");
  return cur;
}

DecoderGradients backward_decoder(const AutoencoderParams& params, const ForwardCache& cache,
                                  const Eigen::MatrixXd& d_recon) {
  if (cache.decoder.size() != params.decoder.size())
    throw std::invalid_argument("backward: cache does not match a completed decode pass");
  if (d_recon.rows() != params.input.size())
    throw std::invalid_argument("backward: d_recon rows do not match the reconstruction shape");

  DecoderGradients grads;
  grads.layers.resize(params.decoder.size());
  Eigen::MatrixXd g = d_recon;
  for (int m = static_cast<int>(params.decoder.size()) - 1; m >= 0; --m) {
    const auto& lc = cache.decoder[static_cast<std::size_t>(m)];
    if (g.rows() != lc.pre.rows() || g.cols() != lc.pre.cols())
      throw std::invalid_argument("backward: upstream gradient shape mismatch in decoder");
    const Eigen::MatrixXd d_pre = lc.activated ? (g.array() * relu_mask(lc.pre).array()).matrix() : g;
    g = layer_backward(params.decoder[static_cast<std::size_t>(m)], lc, d_pre,
                       grads.layers[static_cast<std::size_t>(m)]);
  }
  grads.input = std::move(g);
  return grads;
}

EncoderGradients backward_encoder(const AutoencoderParams& params, const ForwardCache& cache,
                                  const Eigen::MatrixXd& d_latent) {
  if (cache.encoder.size() != params.encoder.size())
    throw std::invalid_argument("backward: cache does not match a completed encode pass");

  EncoderGradients grads;
  grads.layers.resize(params.encoder.size());
  Eigen::MatrixXd g = d_latent;
  for (int j = static_cast<int>(params.encoder.size()) - 1; j >= 0; --j) {
    const auto& lc = cache.encoder[static_cast<std::size_t>(j)];
    if (g.rows() != lc.pre.rows() || g.cols() != lc.pre.cols())
      throw std::invalid_argument("backward: upstream gradient shape mismatch in encoder");
    const Eigen::MatrixXd d_pre = (g.array() * relu_mask(lc.pre).array()).matrix();
    g = layer_backward(params.encoder[static_cast<std::size_t>(j)], lc, d_pre,
                       grads.layers[static_cast<std::size_t>(j)]);
  }
  grads.input = std::move(g);
  return grads;
}

Gradients backward(const AutoencoderParams& params, const ForwardCache& cache,
                   const Eigen::MatrixXd& d_recon, const Eigen::MatrixXd& d_latent) {
  DecoderGradients dec = backward_decoder(params, cache, d_recon);
  Eigen::MatrixXd at_latent = std::move(dec.input);
  if (d_latent.size() > 0) {
    if (d_latent.rows() != at_latent.rows() || d_latent.cols() != at_latent.cols())
      throw std::invalid_argument("backward: d_latent shape does not match the latent");
    at_latent += d_latent;
  }
  EncoderGradients enc = backward_encoder(params, cache, at_latent);

  Gradients grads;
  grads.encoder = std::move(enc.layers);
  grads.decoder = std::move(dec.layers);
  grads.input = std::move(enc.input);
  return grads;
}

}  // namespace mvdsc
