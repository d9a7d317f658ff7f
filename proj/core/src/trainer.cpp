#include "mvdsc/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "mvdsc/csv.hpp"
#include "mvdsc/metrics.hpp"
#include "mvdsc/rng.hpp"
#include "mvdsc/spectral.hpp"

namespace mvdsc {

namespace {

constexpr std::uint64_t kStreamAutoencoder = 11;
constexpr std::uint64_t kStreamSelfExpr = 23;
constexpr std::uint64_t kStreamSpectral = 37;

int resolve_k(const MultiViewDataset& dataset, const TrainConfig& config) {
  if (config.k > 0) return config.k;
  if (dataset.labels) return dataset.cluster_count();
  return 0;
}

void check_finite(double value, const char* term, int epoch) {
  if (!std::isfinite(value))
    throw std::runtime_error(std::string("non-finite ") + term + " at epoch " + std::to_string(epoch));
}

void check_breakdown_finite(const LossBreakdown& loss, int epoch) {
  check_finite(loss.ae, "ae_loss", epoch);
  check_finite(loss.self_expr, "selfexpr_loss", epoch);
  check_finite(loss.lp, "lp_loss", epoch);
  check_finite(loss.universality, "universality_loss", epoch);
  check_finite(loss.diversity, "diversity_loss", epoch);
  check_finite(loss.total, "total_loss", epoch);
}

Eigen::MatrixXd init_z(int n, Rng& rng) {
  Eigen::MatrixXd z(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) z(r, c) = rng.uniform() * 1e-4;
  z.diagonal().setZero();
  return z;
}

std::vector<Eigen::VectorXd> collect_ae_params(const AutoencoderParams& params) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& layer : params.encoder) out.push_back(layer_params(layer));
  for (const auto& layer : params.decoder) out.push_back(layer_params(layer));
  return out;
}

void scatter_ae_params(AutoencoderParams& params, const std::vector<Eigen::VectorXd>& flat,
                       std::size_t& cursor) {
  for (auto& layer : params.encoder) set_layer_params(layer, flat[cursor++]);
  for (auto& layer : params.decoder) set_layer_params(layer, flat[cursor++]);
}

Eigen::VectorXd flatten_matrix(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

Eigen::MatrixXd unflatten_matrix(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

}  // namespace

double default_lambda1(int k) {
  if (k < 1) throw std::invalid_argument("default_lambda1: k must be >= 1");
  return std::pow(10.0, static_cast<double>(k) / 10.0 - 3.0);
}

void TrainConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0 || lambda4 < 0)
    throw std::invalid_argument("TrainConfig: lambdas must be >= 0");
  if (learning_rate <= 0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (pretrain_epochs < 0 || finetune_epochs < 0)
    throw std::invalid_argument("TrainConfig: epoch counts must be >= 0");
  if (adam_beta1 < 0 || adam_beta1 >= 1 || adam_beta2 < 0 || adam_beta2 >= 1)
    throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
  if (adam_epsilon <= 0) throw std::invalid_argument("TrainConfig: adam_epsilon must be > 0");
  if (k < 0) throw std::invalid_argument("TrainConfig: k must be >= 0");
  if (eval_every < 0) throw std::invalid_argument("TrainConfig: eval_every must be >= 0");
}

Weights TrainConfig::weights(int cluster_count) const {
  Weights w{lambda1, lambda2, lambda3, lambda4};
  if (lambda1_auto) {
    if (cluster_count < 1)
      throw std::invalid_argument("lambda1_auto requires a cluster count (set k or provide labels)");
    w.lambda1 = default_lambda1(cluster_count);
  }
  return w;
}

void adam_step(std::vector<Eigen::VectorXd>& params,
               const std::vector<Eigen::VectorXd>& grads, AdamState& state,
               const TrainConfig& config) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: parameter/gradient tensor counts differ");
  if (state.m.empty()) {
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const auto& p : params) {
      state.m.push_back(Eigen::VectorXd::Zero(p.size()));
      state.v.push_back(Eigen::VectorXd::Zero(p.size()));
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state does not match the tensor list");

  state.t += 1;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.t));

  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || params[i].size() != state.m[i].size())
      throw std::invalid_argument("adam_step: tensor shape mismatch at index " + std::to_string(i));
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
    const Eigen::VectorXd m_hat = state.m[i] / correction1;
    const Eigen::VectorXd v_hat = state.v[i] / correction2;
    params[i] -= config.learning_rate *
                 (m_hat.array() / (v_hat.array().sqrt() + config.adam_epsilon)).matrix();
  }
}

AutoencoderSpec autoencoder_spec_for_view(const ViewData& view, const ArchOverride& override_spec) {
  if (view.layout == ViewLayout::kImage) {
    TensorShape input{view.channels, view.height, view.width};
    auto spec = AutoencoderSpec::conv(input);
    if (!override_spec.widths.empty()) {
      spec.widths = override_spec.widths;
      spec.strides = std::vector<int>(spec.widths.size(), 2);
    }
    if (!override_spec.strides.empty()) spec.strides = override_spec.strides;
    if (spec.strides.size() != spec.widths.size())
      throw std::invalid_argument("architecture override: need one stride per layer");
    return spec;
  }
  auto spec = AutoencoderSpec::dense(view.feature_dim());
  if (!override_spec.widths.empty()) spec.widths = override_spec.widths;
  return spec;
}

std::vector<AutoencoderParams> pretrain(const MultiViewDataset& dataset,
                                        const TrainConfig& config, TrainLog* log) {
  dataset.validate();
  config.validate();
  const int v = dataset.n_views();

  std::vector<AutoencoderParams> params;
  std::vector<Eigen::MatrixXd> inputs;
  for (int i = 0; i < v; ++i) {
    const ArchOverride arch =
        i < static_cast<int>(config.arch.size()) ? config.arch[static_cast<std::size_t>(i)] : ArchOverride{};
    const auto spec = autoencoder_spec_for_view(dataset.views[static_cast<std::size_t>(i)], arch);
    params.push_back(init_params(spec, Rng::derive(config.seed, kStreamAutoencoder + static_cast<std::uint64_t>(i)).next_u64()));
    inputs.push_back(to_column_major_samples(dataset.views[static_cast<std::size_t>(i)]));
  }

  std::vector<AdamState> adam(static_cast<std::size_t>(v));
  for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    double recon_loss = 0;
    for (int i = 0; i < v; ++i) {
      auto& p = params[static_cast<std::size_t>(i)];
      const auto& x = inputs[static_cast<std::size_t>(i)];
      ForwardCache cache;
      const Eigen::MatrixXd latent = encode(p, x, cache);
      const Eigen::MatrixXd recon = decode(p, latent, cache);
      recon_loss += (x - recon).squaredNorm();

      const Gradients grads = backward(p, cache, 2.0 * (recon - x), Eigen::MatrixXd());
      auto flat = collect_ae_params(p);
      std::vector<Eigen::VectorXd> flat_grads;
      flat_grads.insert(flat_grads.end(), grads.encoder.begin(), grads.encoder.end());
      flat_grads.insert(flat_grads.end(), grads.decoder.begin(), grads.decoder.end());
      adam_step(flat, flat_grads, adam[static_cast<std::size_t>(i)], config);
      std::size_t cursor = 0;
      scatter_ae_params(p, flat, cursor);
    }
    check_finite(recon_loss, "reconstruction loss", epoch);
    if (log) {
      EpochRecord rec;
      rec.epoch = epoch;
      rec.loss.ae = recon_loss;
      rec.loss.total = recon_loss;
      log->pretrain.push_back(rec);
    }
  }
  return params;
}

FinetuneResult finetune(const MultiViewDataset& dataset,
                        const std::vector<AutoencoderParams>& pretrained,
                        const TrainConfig& config) {
  dataset.validate();
  config.validate();
  const int v = dataset.n_views();
  const int n = dataset.n_samples();
  if (static_cast<int>(pretrained.size()) != v)
    throw std::invalid_argument("finetune: pretrained parameter count differs from view count");

  const int k = resolve_k(dataset, config);
  const Weights weights = config.weights(k);

  FinetuneResult result;
  result.dnet = pretrained;
  result.unet = pretrained;
  result.weights_used = weights;

  Rng zrng = Rng::derive(config.seed, kStreamSelfExpr);
  for (int i = 0; i < v; ++i) result.state.views.push_back(init_z(n, zrng));
  result.state.common = init_z(n, zrng);

  std::vector<Eigen::MatrixXd> inputs;
  for (int i = 0; i < v; ++i) inputs.push_back(to_column_major_samples(dataset.views[static_cast<std::size_t>(i)]));

  AdamState adam;
  for (int epoch = 0; epoch < config.finetune_epochs; ++epoch) {
    std::vector<ViewActivations> acts(static_cast<std::size_t>(v));
    std::vector<ForwardCache> caches_s(static_cast<std::size_t>(v)), caches_c(static_cast<std::size_t>(v));
    for (int i = 0; i < v; ++i) {
      auto& a = acts[static_cast<std::size_t>(i)];
      a.input = inputs[static_cast<std::size_t>(i)];
      a.latent_s = encode(result.dnet[static_cast<std::size_t>(i)], a.input, caches_s[static_cast<std::size_t>(i)]);
      a.recon_s = decode(result.dnet[static_cast<std::size_t>(i)], a.latent_s, caches_s[static_cast<std::size_t>(i)]);
      a.latent_c = encode(result.unet[static_cast<std::size_t>(i)], a.input, caches_c[static_cast<std::size_t>(i)]);
      a.recon_c = decode(result.unet[static_cast<std::size_t>(i)], a.latent_c, caches_c[static_cast<std::size_t>(i)]);
    }

    const LossBreakdown loss = total_loss(acts, result.state, weights);
    check_breakdown_finite(loss, epoch);

    // Parameter list order: per-view Dnet AE, per-view Unet AE, Z_i, Z.
    // The self-representation matrices follow their closed-form gradients;
    // the auto-encoders feel the self-expression term through the latent.
    std::vector<Eigen::VectorXd> flat_params, flat_grads;
    for (int i = 0; i < v; ++i) {
      const auto& a = acts[static_cast<std::size_t>(i)];
      const Gradients gd = backward(result.dnet[static_cast<std::size_t>(i)], caches_s[static_cast<std::size_t>(i)],
                                    2.0 * (a.recon_s - a.input),
                                    grad_latent(a.latent_s, result.state.views[static_cast<std::size_t>(i)], weights.lambda1));
      auto pd = collect_ae_params(result.dnet[static_cast<std::size_t>(i)]);
      flat_params.insert(flat_params.end(), pd.begin(), pd.end());
      flat_grads.insert(flat_grads.end(), gd.encoder.begin(), gd.encoder.end());
      flat_grads.insert(flat_grads.end(), gd.decoder.begin(), gd.decoder.end());
    }
    std::vector<Eigen::MatrixXd> latents_c;
    for (int i = 0; i < v; ++i) {
      const auto& a = acts[static_cast<std::size_t>(i)];
      const Gradients gu = backward(result.unet[static_cast<std::size_t>(i)], caches_c[static_cast<std::size_t>(i)],
                                    2.0 * (a.recon_c - a.input),
                                    grad_latent(a.latent_c, result.state.common, weights.lambda1));
      auto pu = collect_ae_params(result.unet[static_cast<std::size_t>(i)]);
      flat_params.insert(flat_params.end(), pu.begin(), pu.end());
      flat_grads.insert(flat_grads.end(), gu.encoder.begin(), gu.encoder.end());
      flat_grads.insert(flat_grads.end(), gu.decoder.begin(), gu.decoder.end());
      latents_c.push_back(a.latent_c);
    }
    for (int i = 0; i < v; ++i) {
      flat_params.push_back(flatten_matrix(result.state.views[static_cast<std::size_t>(i)]));
      flat_grads.push_back(flatten_matrix(
          grad_z_view(i, acts[static_cast<std::size_t>(i)].latent_s, result.state, weights)));
    }
    flat_params.push_back(flatten_matrix(result.state.common));
    flat_grads.push_back(flatten_matrix(grad_z_common(latents_c, result.state, weights)));

    adam_step(flat_params, flat_grads, adam, config);

    std::size_t cursor = 0;
    for (int i = 0; i < v; ++i) scatter_ae_params(result.dnet[static_cast<std::size_t>(i)], flat_params, cursor);
    for (int i = 0; i < v; ++i) scatter_ae_params(result.unet[static_cast<std::size_t>(i)], flat_params, cursor);
    for (int i = 0; i < v; ++i)
      result.state.views[static_cast<std::size_t>(i)] =
          project_zero_diag(unflatten_matrix(flat_params[cursor++], n, n));
    result.state.common = project_zero_diag(unflatten_matrix(flat_params[cursor++], n, n));

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss;
    const bool eval_now = config.eval_every > 0 && dataset.labels && k >= 2 &&
                          ((epoch + 1) % config.eval_every == 0 || epoch == config.finetune_epochs - 1);
    if (eval_now) {
      const auto labels = spectral_cluster(build_affinity(result.state.common), k,
                                           Rng::derive(config.seed, kStreamSpectral).next_u64());
      rec.nmi = nmi(*dataset.labels, labels);
      rec.acc = acc(*dataset.labels, labels);
    }
    result.log.finetune.push_back(rec);
  }
  return result;
}

void write_trainlog_csv(const std::filesystem::path& path, const TrainLog& log,
                        const Weights& weights) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trainlog for writing: " + path.string());

  bool has_eval = false;
  for (const auto& rec : log.finetune)
    if (rec.nmi || rec.acc) has_eval = true;

  out << "epoch,ae,self_expr,lp,universality,diversity,total";
  if (has_eval) out << ",nmi,acc";
  out << '\n';
  for (const auto& rec : log.finetune) {
    // adding 0.0 normalizes negative zero from gated terms
    out << rec.epoch << ',' << format_double(rec.loss.ae) << ','
        << format_double(weights.lambda1 * rec.loss.self_expr + 0.0) << ','
        << format_double(weights.lambda2 * rec.loss.lp + 0.0) << ','
        << format_double(weights.lambda3 * rec.loss.universality + 0.0) << ','
        << format_double(weights.lambda4 * rec.loss.diversity + 0.0) << ','
        << format_double(rec.loss.total);
    if (has_eval) {
      out << ',';
      if (rec.nmi) out << format_double(*rec.nmi);
      out << ',';
      if (rec.acc) out << format_double(*rec.acc);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("trainlog write failed: " + path.string());
}

ClusteringResult train(const MultiViewDataset& dataset, const TrainConfig& config) {
  dataset.validate();
  config.validate();
  const int k = resolve_k(dataset, config);
  if (k < 2)
    throw std::invalid_argument("train: cluster count unknown; set k or provide labeled data");

  TrainLog pre_log;
  const auto pretrained = pretrain(dataset, config, &pre_log);
  ClusteringResult result;
  result.model = finetune(dataset, pretrained, config);
  result.model.log.pretrain = std::move(pre_log.pretrain);
  result.k = k;
  result.lambda1_used = config.weights(k).lambda1;
  result.affinity = build_affinity(result.model.state.common);
  result.labels = spectral_cluster(result.affinity, k, Rng::derive(config.seed, kStreamSpectral).next_u64());
  return result;
}

}  // namespace mvdsc
