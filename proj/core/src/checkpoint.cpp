#include "mvdsc/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace mvdsc {

using nlohmann::json;

namespace {

json layer_to_json(const Layer& layer) {
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
    return {{"type", "conv"},
            {"in", conv->in_channels},
            {"out", conv->out_channels},
            {"stride", conv->stride},
            {"transposed", conv->transposed}};
  }
  const auto& dense = std::get<DenseLayer>(layer);
  return {{"type", "dense"},
          {"in", static_cast<int>(dense.weights.cols())},
          {"out", static_cast<int>(dense.weights.rows())},
          {"bias", dense.has_bias()}};
}

Layer layer_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "conv") {
    ConvLayer conv;
    conv.in_channels = j.at("in").get<int>();
    conv.out_channels = j.at("out").get<int>();
    conv.stride = j.at("stride").get<int>();
    conv.transposed = j.at("transposed").get<bool>();
    conv.kernels = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(conv.out_channels) *
                                         conv.in_channels * ConvLayer::kKernel * ConvLayer::kKernel);
    return conv;
  }
  if (type == "dense") {
    DenseLayer dense;
    dense.weights = Eigen::MatrixXd::Zero(j.at("out").get<int>(), j.at("in").get<int>());
    if (j.at("bias").get<bool>()) dense.bias = Eigen::VectorXd::Zero(j.at("out").get<int>());
    return dense;
  }
  throw std::runtime_error("checkpoint: unknown layer type '" + type + "'");
}

json ae_to_json(const AutoencoderParams& params) {
  json j;
  j["input"] = {params.input.channels, params.input.height, params.input.width};
  j["encoder"] = json::array();
  j["decoder"] = json::array();
  for (const auto& layer : params.encoder) j["encoder"].push_back(layer_to_json(layer));
  for (const auto& layer : params.decoder) j["decoder"].push_back(layer_to_json(layer));
  return j;
}

AutoencoderParams ae_from_json(const json& j) {
  AutoencoderParams params;
  const auto input = j.at("input").get<std::vector<int>>();
  if (input.size() != 3) throw std::runtime_error("checkpoint: bad input shape");
  params.input = {input[0], input[1], input[2]};
  for (const auto& jl : j.at("encoder")) params.encoder.push_back(layer_from_json(jl));
  for (const auto& jl : j.at("decoder")) params.decoder.push_back(layer_from_json(jl));
  return params;
}

void append_ae_tensors(const AutoencoderParams& params, const std::string& prefix,
                       json& listing, std::vector<Eigen::VectorXd>& payload) {
  int idx = 0;
  for (const auto& layer : params.encoder) {
    listing.push_back({{"name", prefix + ".encoder" + std::to_string(idx)},
                       {"count", layer_param_count(layer)}});
    payload.push_back(layer_params(layer));
    ++idx;
  }
  idx = 0;
  for (const auto& layer : params.decoder) {
    listing.push_back({{"name", prefix + ".decoder" + std::to_string(idx)},
                       {"count", layer_param_count(layer)}});
    payload.push_back(layer_params(layer));
    ++idx;
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt) {
  if (ckpt.dnet.size() != ckpt.unet.size() || ckpt.dnet.size() != ckpt.state.views.size())
    throw std::invalid_argument("save_checkpoint: inconsistent view counts");
  const int n = ckpt.state.n();

  json header;
  header["format"] = "mvdsc-checkpoint";
  header["version"] = 1;
  header["seed"] = ckpt.seed;
  header["epoch"] = ckpt.epoch;
  header["k"] = ckpt.k;
  header["n"] = n;
  header["dnet"] = json::array();
  header["unet"] = json::array();
  for (const auto& ae : ckpt.dnet) header["dnet"].push_back(ae_to_json(ae));
  for (const auto& ae : ckpt.unet) header["unet"].push_back(ae_to_json(ae));

  json listing = json::array();
  std::vector<Eigen::VectorXd> payload;
  for (std::size_t i = 0; i < ckpt.dnet.size(); ++i)
    append_ae_tensors(ckpt.dnet[i], "dnet" + std::to_string(i), listing, payload);
  for (std::size_t i = 0; i < ckpt.unet.size(); ++i)
    append_ae_tensors(ckpt.unet[i], "unet" + std::to_string(i), listing, payload);
  for (std::size_t i = 0; i < ckpt.state.views.size(); ++i) {
    listing.push_back({{"name", "z.view" + std::to_string(i)}, {"count", n * n}});
    payload.push_back(Eigen::Map<const Eigen::VectorXd>(ckpt.state.views[i].data(), n * n));
  }
  listing.push_back({{"name", "z.common"}, {"count", n * n}});
  payload.push_back(Eigen::Map<const Eigen::VectorXd>(ckpt.state.common.data(), n * n));
  header["tensors"] = std::move(listing);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
  out << header.dump() << '\n';
  for (const auto& tensor : payload)
    out.write(reinterpret_cast<const char*>(tensor.data()),
              static_cast<std::streamsize>(tensor.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  std::string header_line;
  if (!std::getline(in, header_line)) throw std::runtime_error("checkpoint missing header: " + path.string());

  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint header parse error: " + std::string(e.what()));
  }
  if (header.value("format", std::string{}) != "mvdsc-checkpoint")
    throw std::runtime_error("not a checkpoint file: " + path.string());

  ModelCheckpoint ckpt;
  ckpt.seed = header.at("seed").get<std::uint64_t>();
  ckpt.epoch = header.at("epoch").get<int>();
  ckpt.k = header.at("k").get<int>();
  const int n = header.at("n").get<int>();

  for (const auto& jae : header.at("dnet")) ckpt.dnet.push_back(ae_from_json(jae));
  for (const auto& jae : header.at("unet")) ckpt.unet.push_back(ae_from_json(jae));
  const std::size_t views = ckpt.dnet.size();

  auto read_tensor = [&in, &path](Eigen::Index count) {
    Eigen::VectorXd tensor(count);
    in.read(reinterpret_cast<char*>(tensor.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint payload truncated: " + path.string());
    return tensor;
  };

  const auto& listing = header.at("tensors");
  std::size_t entry = 0;
  auto read_listed = [&](const std::string& expected_name) {
    if (entry >= listing.size()) throw std::runtime_error("checkpoint listing too short");
    const auto& item = listing[entry++];
    if (item.at("name").get<std::string>() != expected_name)
      throw std::runtime_error("checkpoint listing out of order: expected " + expected_name);
    return read_tensor(item.at("count").get<Eigen::Index>());
  };

  auto load_ae = [&](AutoencoderParams& params, const std::string& prefix) {
    int idx = 0;
    for (auto& layer : params.encoder)
      set_layer_params(layer, read_listed(prefix + ".encoder" + std::to_string(idx++)));
    idx = 0;
    for (auto& layer : params.decoder)
      set_layer_params(layer, read_listed(prefix + ".decoder" + std::to_string(idx++)));
  };

  for (std::size_t i = 0; i < views; ++i) load_ae(ckpt.dnet[i], "dnet" + std::to_string(i));
  for (std::size_t i = 0; i < views; ++i) load_ae(ckpt.unet[i], "unet" + std::to_string(i));
  for (std::size_t i = 0; i < views; ++i) {
    const Eigen::VectorXd flat = read_listed("z.view" + std::to_string(i));
    ckpt.state.views.push_back(Eigen::Map<const Eigen::MatrixXd>(flat.data(), n, n));
  }
  const Eigen::VectorXd flat = read_listed("z.common");
  ckpt.state.common = Eigen::Map<const Eigen::MatrixXd>(flat.data(), n, n);
  return ckpt;
}

}  // namespace mvdsc
