#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace mvdsc {

/// A = (|Z| + |Z|^T) / 2. Symmetric and entrywise nonnegative.
Eigen::MatrixXd build_affinity(const Eigen::MatrixXd& z);

struct EigenDecomposition {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // column j pairs with values[j]
  int sweeps = 0;
};

/// Full spectrum of a symmetric matrix by cyclic Jacobi rotations.
/// Deterministic; ties in the ascending sort break by original index.
/// Throws after `max_sweeps` sweeps without convergence.
EigenDecomposition jacobi_eigen(const Eigen::MatrixXd& m, int max_sweeps = 100);

/// k smallest eigenpairs of a symmetric matrix, ascending.
EigenDecomposition symmetric_eig_smallest(const Eigen::MatrixXd& m, int k);

struct KMeansResult {
  std::vector<int> labels;
  double inertia = 0;
  std::vector<double> inertia_trace;  // per Lloyd iteration, best restart
};

/// One k-means++ run on row vectors; exposed for property tests.
KMeansResult kmeans_single(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                           int max_iters = 300);

/// Seeded k-means++ with restarts; keeps the lowest-inertia run (first
/// wins ties).
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                    int restarts = 50, int max_iters = 300);

/// Normalized spectral clustering: L = I - D^{-1/2} A D^{-1/2} (isolated
/// vertices keep a zero scaling entry), embedding from the k smallest
/// eigenvectors with unit-normalized rows, then k-means++.
std::vector<int> spectral_cluster(const Eigen::MatrixXd& affinity, int k, std::uint64_t seed);

}  // namespace mvdsc
