#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mvdsc {

enum class ViewLayout { kFlat, kImage };

/// One view of a multi-view dataset. Samples are stored one per row in the
/// on-disk convention; image samples are flattened channel-major, then
/// row-major within a channel.
struct ViewData {
  ViewLayout layout = ViewLayout::kFlat;
  int channels = 1;  // image layout only
  int height = 1;
  int width = 1;
  Eigen::MatrixXd rows;  // n_samples x feature_dim

  int n_samples() const { return static_cast<int>(rows.rows()); }
  int feature_dim() const { return static_cast<int>(rows.cols()); }

  /// Manifest-style shape: [n, d] for flat views, [n, c, h, w] for images.
  std::vector<int> shape() const;

  /// all values finite, n_samples >= 2, feature_dim >= 1, and for images
  /// feature_dim == channels * height * width.
  void validate() const;
};

/// Flat feature index of pixel (channel, y, x) in a flattened image sample.
inline int image_feature_index(const ViewData& view, int channel, int y, int x) {
  return (channel * view.height + y) * view.width + x;
}

ViewData make_flat_view(Eigen::MatrixXd rows);

/// Builds an image view from data laid out as [sample][channel][y][x].
ViewData make_image_view(int n, int channels, int height, int width,
                         const std::vector<double>& data_nchw);

struct MultiViewDataset {
  std::string name;
  std::vector<ViewData> views;
  std::optional<std::vector<int>> labels;  // 0-based, contiguous

  int n_samples() const { return views.empty() ? 0 : views.front().n_samples(); }
  int n_views() const { return static_cast<int>(views.size()); }

  /// Number of distinct labels; throws when labels are absent.
  int cluster_count() const;

  /// Checks per-view validity, consistent sample counts, and label
  /// contiguity (every value in 0..k-1 present).
  void validate() const;
};

/// Recipe for a union-of-subspaces dataset: k clusters sharing one sample
/// assignment across views, each (view, cluster) pair drawing its own
/// orthonormal basis.
struct SyntheticSpec {
  int clusters = 2;
  int per_cluster = 10;
  int views = 1;
  std::vector<int> ambient_dims;
  int subspace_rank = 1;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticResult {
  MultiViewDataset dataset;
  /// bases[view][cluster]: the planted orthonormal d_i x r basis.
  std::vector<std::vector<Eigen::MatrixXd>> bases;
};

SyntheticResult generate_synthetic_with_bases(const SyntheticSpec& spec);
MultiViewDataset generate_synthetic(const SyntheticSpec& spec);

/// Internal convention: columns are samples. Column j of the result is the
/// flattened sample j, so entry (f, s) equals rows(s, f).
Eigen::MatrixXd to_column_major_samples(const ViewData& view);

/// Inverse of to_column_major_samples; `like` supplies the layout metadata.
ViewData from_column_major_samples(const Eigen::MatrixXd& columns, const ViewData& like);

/// Reads a manifest JSON and the view/label CSVs it references. Paths in
/// the manifest are resolved relative to the manifest's directory.
MultiViewDataset load_manifest(const std::filesystem::path& manifest_path);

/// Writes manifest.json, view<i>.csv, and labels.csv under dir.
/// Returns the manifest path.
std::filesystem::path save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir);

}  // namespace mvdsc
