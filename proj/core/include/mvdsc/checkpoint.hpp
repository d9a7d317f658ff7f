#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mvdsc/autoencoder.hpp"
#include "mvdsc/selfexpr.hpp"

namespace mvdsc {

/// Everything needed to re-run spectral clustering or inspect a trained
/// model without retraining.
struct ModelCheckpoint {
  std::uint64_t seed = 0;
  int epoch = 0;  // completed fine-tuning epochs
  int k = 0;      // 0 when unknown
  std::vector<AutoencoderParams> dnet;
  std::vector<AutoencoderParams> unet;
  SelfExprState state;
};

/// File layout: one-line JSON header (layer shapes plus seed/epoch/k and
/// the ordered tensor listing), a newline, then every tensor's values as
/// little-endian 64-bit floats in listing order.
void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt);

ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mvdsc
