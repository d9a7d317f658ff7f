#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mvdsc/autoencoder.hpp"
#include "mvdsc/dataset.hpp"
#include "mvdsc/selfexpr.hpp"

namespace mvdsc {

/// lambda1 = 10^(k/10 - 3) where k is the number of clusters.
double default_lambda1(int k);

/// Per-view architecture override; empty vectors fall back to defaults
/// ([64, 32, 16] channels for image views, [min(d,64), min(d,32),
/// min(d,16)] widths for flat views, stride 2 everywhere).
struct ArchOverride {
  std::vector<int> widths;
  std::vector<int> strides;
};

/// The full experiment recipe.
struct TrainConfig {
  double lambda1 = 10.0;
  double lambda2 = 1.0;
  double lambda3 = 0.1;
  double lambda4 = 0.1;
  /// When set, lambda1 is replaced by default_lambda1(k) at train time.
  bool lambda1_auto = false;

  double learning_rate = 1e-3;
  int pretrain_epochs = 1000;
  int finetune_epochs = 3000;
  std::uint64_t seed = 0;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  int k = 0;  // cluster count; 0 means "take it from the labels"
  /// Epoch stride for in-training clustering evaluation; 0 disables it.
  int eval_every = 0;

  std::vector<ArchOverride> arch;  // per view; may be empty

  void validate() const;
  Weights weights(int cluster_count) const;
};

/// First/second moment accumulators, one pair per parameter tensor.
struct AdamState {
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;
  long t = 0;
};

/// One bias-corrected Adam update over a tensor list. The state is bound
/// to the tensor layout on first use; shapes must match thereafter.
void adam_step(std::vector<Eigen::VectorXd>& params,
               const std::vector<Eigen::VectorXd>& grads, AdamState& state,
               const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  LossBreakdown loss;  // raw terms; CSV export applies the lambda weights
  std::optional<double> nmi;
  std::optional<double> acc;
};

struct TrainLog {
  std::vector<EpochRecord> pretrain;
  std::vector<EpochRecord> finetune;
};

AutoencoderSpec autoencoder_spec_for_view(const ViewData& view, const ArchOverride& override_spec);

/// Reconstruction-only training of one auto-encoder per view. Both
/// sub-networks are later initialized from these weights.
std::vector<AutoencoderParams> pretrain(const MultiViewDataset& dataset,
                                        const TrainConfig& config, TrainLog* log = nullptr);

struct FinetuneResult {
  SelfExprState state;
  std::vector<AutoencoderParams> dnet;  // view-specific branch
  std::vector<AutoencoderParams> unet;  // common branch
  TrainLog log;
  Weights weights_used;
};

/// Joint optimization of both branches and all self-representation
/// matrices: full-batch forward, reverse-mode gradients into the
/// auto-encoders, closed-form gradients into the Z matrices, one Adam
/// step per epoch, then zero-diagonal projection.
FinetuneResult finetune(const MultiViewDataset& dataset,
                        const std::vector<AutoencoderParams>& pretrained,
                        const TrainConfig& config);

struct ClusteringResult {
  std::vector<int> labels;
  Eigen::MatrixXd affinity;
  FinetuneResult model;
  int k = 0;
  double lambda1_used = 0;
};

/// Pretrain, fine-tune, build the affinity from the common matrix, and
/// spectrally cluster it.
ClusteringResult train(const MultiViewDataset& dataset, const TrainConfig& config);

/// Fine-tuning loss curve as CSV: epoch, the weighted contribution of
/// each term, the total, and NMI/ACC columns when any epoch carries them.
void write_trainlog_csv(const std::filesystem::path& path, const TrainLog& log,
                        const Weights& weights);

}  // namespace mvdsc
