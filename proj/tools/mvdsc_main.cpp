// Command-line front end: dataset generation, training, re-clustering,
// evaluation, and report export.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "mvdsc/checkpoint.hpp"
#include "mvdsc/csv.hpp"
#include "mvdsc/dataset.hpp"
#include "mvdsc/metrics.hpp"
#include "mvdsc/spectral.hpp"
#include "mvdsc/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 2;

struct TrainFlags {
  std::string manifest;
  std::string out_dir;
  std::string config_path;
  mvdsc::TrainConfig config;
  std::vector<int> widths;
  std::vector<int> channels;
  std::vector<int> strides;
};

void add_train_options(CLI::App* cmd, TrainFlags& flags) {
  cmd->add_option("--manifest", flags.manifest, "Dataset manifest JSON")->required();
  cmd->add_option("--out", flags.out_dir, "Output directory")->required();
  cmd->add_option("--config", flags.config_path, "JSON config file (flags take precedence)");
  cmd->add_option("--k", flags.config.k, "Cluster count (defaults to the label count)");
  cmd->add_option("--lambda1", flags.config.lambda1, "Self-representation weight");
  cmd->add_flag("--lambda1-auto", flags.config.lambda1_auto, "Set lambda1 = 10^(k/10 - 3)");
  cmd->add_option("--lambda2", flags.config.lambda2, "Frobenius-norm weight");
  cmd->add_option("--lambda3", flags.config.lambda3, "Universality weight");
  cmd->add_option("--lambda4", flags.config.lambda4, "Diversity weight");
  cmd->add_option("--lr", flags.config.learning_rate, "Adam learning rate");
  cmd->add_option("--pretrain-epochs", flags.config.pretrain_epochs, "Reconstruction-only epochs");
  cmd->add_option("--finetune-epochs", flags.config.finetune_epochs, "Joint training epochs");
  cmd->add_option("--seed", flags.config.seed, "Random seed");
  cmd->add_option("--eval-every", flags.config.eval_every,
                  "Cluster and score every N fine-tune epochs (0 = off)");
  cmd->add_option("--widths", flags.widths, "Dense encoder widths, e.g. 8,6,4")->delimiter(',');
  cmd->add_option("--channels", flags.channels, "Conv encoder channels, e.g. 64,32,16")->delimiter(',');
  cmd->add_option("--strides", flags.strides, "Conv strides, e.g. 2,2,2")->delimiter(',');
}

// Config-file values fill in every option the command line left untouched.
void apply_config_file(const CLI::App* cmd, TrainFlags& flags) {
  if (flags.config_path.empty()) return;
  std::ifstream in(flags.config_path);
  if (!in) throw std::runtime_error("cannot open config file: " + flags.config_path);
  json doc = json::parse(in);

  auto untouched = [cmd](const std::string& name) {
    const auto* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() == 0;
  };
  auto pull = [&](const char* flag, const char* key, auto& target) {
    if (doc.contains(key) && untouched(flag)) target = doc.at(key).get<std::decay_t<decltype(target)>>();
  };

  pull("--k", "k", flags.config.k);
  pull("--lambda1", "lambda1", flags.config.lambda1);
  pull("--lambda1-auto", "lambda1_auto", flags.config.lambda1_auto);
  pull("--lambda2", "lambda2", flags.config.lambda2);
  pull("--lambda3", "lambda3", flags.config.lambda3);
  pull("--lambda4", "lambda4", flags.config.lambda4);
  pull("--lr", "learning_rate", flags.config.learning_rate);
  pull("--pretrain-epochs", "pretrain_epochs", flags.config.pretrain_epochs);
  pull("--finetune-epochs", "finetune_epochs", flags.config.finetune_epochs);
  pull("--seed", "seed", flags.config.seed);
  pull("--eval-every", "eval_every", flags.config.eval_every);
  pull("--widths", "widths", flags.widths);
  pull("--channels", "channels", flags.channels);
  pull("--strides", "strides", flags.strides);
  if (doc.contains("adam_beta1")) flags.config.adam_beta1 = doc.at("adam_beta1").get<double>();
  if (doc.contains("adam_beta2")) flags.config.adam_beta2 = doc.at("adam_beta2").get<double>();
  if (doc.contains("adam_epsilon")) flags.config.adam_epsilon = doc.at("adam_epsilon").get<double>();
}

mvdsc::TrainConfig finalize_config(const mvdsc::MultiViewDataset& ds, const TrainFlags& flags) {
  mvdsc::TrainConfig config = flags.config;
  config.arch.clear();
  for (const auto& view : ds.views) {
    mvdsc::ArchOverride arch;
    if (view.layout == mvdsc::ViewLayout::kFlat) {
      arch.widths = flags.widths;
    } else {
      arch.widths = flags.channels;
      arch.strides = flags.strides;
    }
    config.arch.push_back(std::move(arch));
  }
  config.validate();
  return config;
}

int cmd_generate(const mvdsc::SyntheticSpec& spec, const std::string& out_dir) {
  const auto ds = mvdsc::generate_synthetic(spec);
  const auto manifest = mvdsc::save_dataset(ds, out_dir);
  std::cout << "wrote " << manifest.string() << " (" << ds.n_samples() << " samples, "
            << ds.n_views() << " views)\n";
  return 0;
}

int cmd_train(const CLI::App* cmd, TrainFlags& flags) {
  if (!fs::exists(flags.manifest)) {
    std::cerr << "error: missing manifest: " << flags.manifest << '\n';
    return kExitFailure;
  }
  apply_config_file(cmd, flags);

  const auto ds = mvdsc::load_manifest(flags.manifest);
  const auto config = finalize_config(ds, flags);
  const auto result = mvdsc::train(ds, config);

  fs::create_directories(flags.out_dir);
  const fs::path out(flags.out_dir);

  mvdsc::ModelCheckpoint ckpt;
  ckpt.seed = config.seed;
  ckpt.epoch = config.finetune_epochs;
  ckpt.k = result.k;
  ckpt.dnet = result.model.dnet;
  ckpt.unet = result.model.unet;
  ckpt.state = result.model.state;
  mvdsc::save_checkpoint(out / "model.ckpt", ckpt);

  mvdsc::write_csv_labels(out / "labels.csv", result.labels);
  mvdsc::write_trainlog_csv(out / "trainlog.csv", result.model.log, result.model.weights_used);
  mvdsc::write_csv_matrix(out / "affinity.csv", result.affinity);

  std::cout << "k=" << result.k << " lambda1=" << result.lambda1_used << '\n';
  if (!result.model.log.finetune.empty())
    std::cout << "final total loss: " << result.model.log.finetune.back().loss.total << '\n';

  if (ds.labels) {
    const auto report = mvdsc::evaluate(*ds.labels, result.labels);
    std::ofstream mout(out / "metrics.json", std::ios::binary);
    mout << mvdsc::metric_report_json(report) << '\n';
    if (!mout) throw std::runtime_error("write failed: metrics.json");
    std::cout << mvdsc::metric_report_json(report) << '\n';
  }
  std::cout << "artifacts written to " << out.string() << '\n';
  return 0;
}

int cmd_cluster(const std::string& ckpt_path, int k, std::uint64_t seed, bool seed_given,
                const std::string& out_dir) {
  const auto ckpt = mvdsc::load_checkpoint(ckpt_path);
  const int k_eff = k > 0 ? k : ckpt.k;
  if (k_eff < 2) throw std::invalid_argument("cluster: pass --k (checkpoint has no cluster count)");
  const auto affinity = mvdsc::build_affinity(ckpt.state.common);
  const auto labels = mvdsc::spectral_cluster(affinity, k_eff, seed_given ? seed : ckpt.seed);

  fs::create_directories(out_dir);
  mvdsc::write_csv_labels(fs::path(out_dir) / "labels.csv", labels);
  std::cout << "wrote " << (fs::path(out_dir) / "labels.csv").string() << " (k=" << k_eff << ")\n";
  return 0;
}

int cmd_evaluate(const std::string& truth_path, const std::string& pred_path) {
  const auto truth = mvdsc::read_csv_labels(truth_path);
  const auto pred = mvdsc::read_csv_labels(pred_path);
  const auto report = mvdsc::evaluate(truth, pred);
  std::cout << mvdsc::metric_report_json(report) << '\n';
  return 0;
}

int cmd_report(const std::string& ckpt_path, const std::string& trainlog, const std::string& out_dir) {
  const auto ckpt = mvdsc::load_checkpoint(ckpt_path);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  mvdsc::write_csv_matrix(out / "affinity.csv", mvdsc::build_affinity(ckpt.state.common));
  for (std::size_t i = 0; i < ckpt.state.views.size(); ++i)
    mvdsc::write_csv_matrix(out / ("affinity_view" + std::to_string(i) + ".csv"),
                            mvdsc::build_affinity(ckpt.state.views[i]));
  if (!trainlog.empty()) {
    if (!fs::exists(trainlog)) throw std::runtime_error("missing trainlog: " + trainlog);
    fs::copy_file(trainlog, out / "losscurve.csv", fs::copy_options::overwrite_existing);
  }
  std::cout << "report written to " << out.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view deep subspace clustering"};
  app.require_subcommand(1);

  // generate
  mvdsc::SyntheticSpec spec;
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Write a synthetic union-of-subspaces dataset");
  gen->add_option("--clusters", spec.clusters, "Cluster count")->required();
  gen->add_option("--per-cluster", spec.per_cluster, "Samples per cluster")->required();
  gen->add_option("--views", spec.views, "View count")->required();
  gen->add_option("--dims", spec.ambient_dims, "Ambient dimension per view, e.g. 10,12")
      ->required()
      ->delimiter(',');
  gen->add_option("--rank", spec.subspace_rank, "Planted subspace rank")->required();
  gen->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma");
  gen->add_option("--seed", spec.seed, "Random seed");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // train
  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train the model and cluster the data");
  add_train_options(train_cmd, tf);

  // cluster
  std::string cl_ckpt, cl_out;
  int cl_k = 0;
  std::uint64_t cl_seed = 0;
  auto* cluster_cmd = app.add_subcommand("cluster", "Re-cluster from a saved checkpoint");
  cluster_cmd->add_option("--checkpoint", cl_ckpt, "Model checkpoint")->required();
  cluster_cmd->add_option("--k", cl_k, "Cluster count (default: from checkpoint)");
  auto* cl_seed_opt = cluster_cmd->add_option("--seed", cl_seed, "k-means seed (default: from checkpoint)");
  cluster_cmd->add_option("--out", cl_out, "Output directory")->required();

  // evaluate
  std::string ev_truth, ev_pred;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predicted labels against ground truth");
  eval_cmd->add_option("--truth", ev_truth, "Ground-truth labels CSV")->required();
  eval_cmd->add_option("--pred", ev_pred, "Predicted labels CSV")->required();

  // report
  std::string rp_ckpt, rp_log, rp_out;
  auto* report_cmd = app.add_subcommand("report", "Export affinity and loss-curve CSV data");
  report_cmd->add_option("--checkpoint", rp_ckpt, "Model checkpoint")->required();
  report_cmd->add_option("--trainlog", rp_log, "trainlog.csv to copy as losscurve.csv");
  report_cmd->add_option("--out", rp_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitFailure;
  }

  try {
    if (gen->parsed()) return cmd_generate(spec, gen_out);
    if (train_cmd->parsed()) return cmd_train(train_cmd, tf);
    if (cluster_cmd->parsed()) return cmd_cluster(cl_ckpt, cl_k, cl_seed, cl_seed_opt->count() > 0, cl_out);
    if (eval_cmd->parsed()) return cmd_evaluate(ev_truth, ev_pred);
    if (report_cmd->parsed()) return cmd_report(rp_ckpt, rp_log, rp_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
