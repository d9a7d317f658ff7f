#include "mvdsc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mvdsc/csv.hpp"
#include "mvdsc/rng.hpp"

namespace mvdsc {

using nlohmann::json;

std::vector<int> ViewData::shape() const {
  if (layout == ViewLayout::kFlat) return {n_samples(), feature_dim()};
  return {n_samples(), channels, height, width};
}

void ViewData::validate() const {
  if (n_samples() < 2) throw std::invalid_argument("view must have at least 2 samples");
  if (feature_dim() < 1) throw std::invalid_argument("view must have at least 1 feature");
  if (layout == ViewLayout::kImage) {
    if (channels < 1 || height < 1 || width < 1)
      throw std::invalid_argument("image view dimensions must be positive");
    if (feature_dim() != channels * height * width)
      throw std::invalid_argument("image view feature dim does not match channels*height*width");
  }
  if (!rows.allFinite()) throw std::invalid_argument("non-finite value in view data");
}

ViewData make_flat_view(Eigen::MatrixXd rows) {
  ViewData v;
  v.layout = ViewLayout::kFlat;
  v.rows = std::move(rows);
  return v;
}

ViewData make_image_view(int n, int channels, int height, int width,
                         const std::vector<double>& data_nchw) {
  const int d = channels * height * width;
  if (static_cast<int>(data_nchw.size()) != n * d)
    throw std::invalid_argument("image data size does not match n*c*h*w");
  ViewData v;
  v.layout = ViewLayout::kImage;
  v.channels = channels;
  v.height = height;
  v.width = width;
  v.rows.resize(n, d);
  for (int s = 0; s < n; ++s)
    for (int f = 0; f < d; ++f) v.rows(s, f) = data_nchw[static_cast<std::size_t>(s) * d + f];
  return v;
}

int MultiViewDataset::cluster_count() const {
  if (!labels) throw std::logic_error("dataset has no labels");
  return labels->empty() ? 0 : *std::max_element(labels->begin(), labels->end()) + 1;
}

void MultiViewDataset::validate() const {
  if (views.empty()) throw std::invalid_argument("dataset must have at least one view");
  const int n = views.front().n_samples();
  for (const auto& v : views) {
    v.validate();
    if (v.n_samples() != n) throw std::invalid_argument("inconsistent sample count across views");
  }
  if (labels) {
    if (static_cast<int>(labels->size()) != n)
      throw std::invalid_argument("label count does not match sample count");
    std::set<int> distinct(labels->begin(), labels->end());
    if (*distinct.begin() != 0 || *distinct.rbegin() != static_cast<int>(distinct.size()) - 1)
      throw std::invalid_argument("labels must be contiguous 0..k-1");
  }
}

void SyntheticSpec::validate() const {
  if (clusters < 2) throw std::invalid_argument("synthetic spec: clusters must be >= 2");
  if (subspace_rank < 1) throw std::invalid_argument("synthetic spec: subspace_rank must be >= 1");
  if (per_cluster < subspace_rank + 1)
    throw std::invalid_argument("synthetic spec: per_cluster must be >= subspace_rank + 1");
  if (views < 1) throw std::invalid_argument("synthetic spec: views must be >= 1");
  if (static_cast<int>(ambient_dims.size()) != views)
    throw std::invalid_argument("synthetic spec: ambient_dims must list one dimension per view");
  for (int d : ambient_dims)
    if (d <= subspace_rank)
      throw std::invalid_argument("synthetic spec: subspace_rank must be < every ambient dim");
  if (noise_sigma < 0) throw std::invalid_argument("synthetic spec: noise_sigma must be >= 0");
}

SyntheticResult generate_synthetic_with_bases(const SyntheticSpec& spec) {
  spec.validate();
  const int n = spec.clusters * spec.per_cluster;
  const int r = spec.subspace_rank;

  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int c = 0; c < spec.clusters; ++c)
    for (int s = 0; s < spec.per_cluster; ++s) labels[static_cast<std::size_t>(c * spec.per_cluster + s)] = c;

  SyntheticResult out;
  out.dataset.name = "synthetic";
  out.bases.resize(static_cast<std::size_t>(spec.views));

  for (int view = 0; view < spec.views; ++view) {
    const int d = spec.ambient_dims[static_cast<std::size_t>(view)];
    Eigen::MatrixXd rows(n, d);
    for (int c = 0; c < spec.clusters; ++c) {
      Rng rng = Rng::derive(spec.seed, static_cast<std::uint64_t>(view) * 1000003ULL + static_cast<std::uint64_t>(c));
      Eigen::MatrixXd gauss(d, r);
      for (int j = 0; j < r; ++j)
        for (int i = 0; i < d; ++i) gauss(i, j) = rng.normal();
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
      Eigen::MatrixXd basis = qr.householderQ() * Eigen::MatrixXd::Identity(d, r);
      out.bases[static_cast<std::size_t>(view)].push_back(basis);

      for (int s = 0; s < spec.per_cluster; ++s) {
        Eigen::VectorXd w(r);
        for (int j = 0; j < r; ++j) w(j) = rng.uniform(-1.0, 1.0);
        Eigen::VectorXd x = basis * w;
        if (spec.noise_sigma > 0)
          for (int i = 0; i < d; ++i) x(i) += spec.noise_sigma * rng.normal();
        rows.row(c * spec.per_cluster + s) = x.transpose();
      }
    }
    out.dataset.views.push_back(make_flat_view(std::move(rows)));
  }
  out.dataset.labels = std::move(labels);
  out.dataset.validate();
  return out;
}

MultiViewDataset generate_synthetic(const SyntheticSpec& spec) {
  return generate_synthetic_with_bases(spec).dataset;
}

Eigen::MatrixXd to_column_major_samples(const ViewData& view) {
  return view.rows.transpose();
}

ViewData from_column_major_samples(const Eigen::MatrixXd& columns, const ViewData& like) {
  ViewData v = like;
  v.rows = columns.transpose();
  if (v.rows.rows() != like.rows.rows() || v.rows.cols() != like.rows.cols())
    throw std::invalid_argument("column matrix shape does not match view metadata");
  return v;
}

namespace {

ViewLayout parse_layout(const std::string& s) {
  if (s == "flat") return ViewLayout::kFlat;
  if (s == "image") return ViewLayout::kImage;
  throw std::runtime_error("manifest: unknown layout '" + s + "'");
}

}  // namespace

MultiViewDataset load_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest parse error in " + manifest_path.string() + ": " + e.what());
  }

  MultiViewDataset ds;
  ds.name = doc.value("name", std::string{});
  const int n = doc.at("n_samples").get<int>();
  const auto base = manifest_path.parent_path();

  for (const auto& jview : doc.at("views")) {
    ViewData v;
    v.layout = parse_layout(jview.at("layout").get<std::string>());
    const auto shape = jview.at("shape").get<std::vector<int>>();
    const auto path = base / jview.at("path").get<std::string>();
    if (!std::filesystem::exists(path)) throw std::runtime_error("missing view file: " + path.string());

    int expected_dim = 0;
    if (v.layout == ViewLayout::kFlat) {
      if (shape.size() != 2) throw std::runtime_error("manifest: flat view shape must be [n, d]");
      expected_dim = shape[1];
    } else {
      if (shape.size() != 4) throw std::runtime_error("manifest: image view shape must be [n, c, h, w]");
      v.channels = shape[1];
      v.height = shape[2];
      v.width = shape[3];
      expected_dim = shape[1] * shape[2] * shape[3];
    }
    if (shape[0] != n)
      throw std::runtime_error("manifest: view shape n=" + std::to_string(shape[0]) +
                               " disagrees with n_samples=" + std::to_string(n));

    v.rows = read_csv_matrix(path);
    if (v.n_samples() != n)
      throw std::runtime_error("inconsistent sample count: " + path.string() + " has " +
                               std::to_string(v.n_samples()) + " rows, manifest says " + std::to_string(n));
    if (v.feature_dim() != expected_dim)
      throw std::runtime_error("shape mismatch: " + path.string() + " has " +
                               std::to_string(v.feature_dim()) + " columns, manifest says " +
                               std::to_string(expected_dim));
    ds.views.push_back(std::move(v));
  }

  if (doc.contains("labels") && !doc["labels"].is_null()) {
    const auto lpath = base / doc["labels"].get<std::string>();
    if (!std::filesystem::exists(lpath)) throw std::runtime_error("missing labels file: " + lpath.string());
    ds.labels = read_csv_labels(lpath);
  }

  ds.validate();
  return ds;
}

std::filesystem::path save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);

  json doc;
  doc["name"] = ds.name;
  doc["n_samples"] = ds.n_samples();
  doc["views"] = json::array();
  for (int i = 0; i < ds.n_views(); ++i) {
    const auto& v = ds.views[static_cast<std::size_t>(i)];
    const std::string fname = "view" + std::to_string(i) + ".csv";
    write_csv_matrix(dir / fname, v.rows);
    doc["views"].push_back({{"path", fname},
                            {"layout", v.layout == ViewLayout::kFlat ? "flat" : "image"},
                            {"shape", v.shape()}});
  }
  if (ds.labels) {
    write_csv_labels(dir / "labels.csv", *ds.labels);
    doc["labels"] = "labels.csv";
  }

  const auto manifest_path = dir / "manifest.json";
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + manifest_path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + manifest_path.string());
  return manifest_path;
}

}  // namespace mvdsc
