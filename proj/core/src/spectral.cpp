#include "mvdsc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mvdsc/rng.hpp"

namespace mvdsc {

Eigen::MatrixXd build_affinity(const Eigen::MatrixXd& z) {
  if (z.rows() != z.cols())
    throw std::invalid_argument("build_affinity: matrix must be square");
  const Eigen::MatrixXd abs = z.cwiseAbs();
  return 0.5 * (abs + abs.transpose());
}

EigenDecomposition jacobi_eigen(const Eigen::MatrixXd& m, int max_sweeps) {
  if (m.rows() != m.cols()) throw std::invalid_argument("jacobi_eigen: matrix must be square");
  const int n = static_cast<int>(m.rows());
  if (!m.isApprox(m.transpose(), 1e-12))
    throw std::invalid_argument("jacobi_eigen: matrix must be symmetric");

  Eigen::MatrixXd a = m;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = std::max(m.norm(), std::numeric_limits<double>::min());
  const double tol = 1e-12 * scale;

  auto off_norm = [&a, n]() {
    double s = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
    return std::sqrt(2.0 * s);
  };

  int sweep = 0;
  while (off_norm() > tol) {
    if (++sweep > max_sweeps)
      throw std::runtime_error("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-3 * tol / n) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // A <- J^T A J on rows/cols p and q
        for (int i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
  }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&a](int i, int j) { return a(i, i) < a(j, j); });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j)]);
    out.vectors.col(j) = v.col(order[static_cast<std::size_t>(j)]);
  }
  out.sweeps = sweep;
  return out;
}

EigenDecomposition symmetric_eig_smallest(const Eigen::MatrixXd& m, int k) {
  if (k < 1 || k > m.rows())
    throw std::invalid_argument("symmetric_eig_smallest: k out of range");
  EigenDecomposition full = jacobi_eigen(m);
  EigenDecomposition out;
  out.values = full.values.head(k);
  out.vectors = full.vectors.leftCols(k);
  out.sweeps = full.sweeps;
  return out;
}

namespace {

double point_center_dist2(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                          Eigen::Index p, Eigen::Index c) {
  return (points.row(p) - centers.row(c)).squaredNorm();
}

Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& points, int k, Rng& rng) {
  const auto n = points.rows();
  Eigen::MatrixXd centers(k, points.cols());
  centers.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));

  Eigen::VectorXd dist2(n);
  for (Eigen::Index p = 0; p < n; ++p) dist2[p] = point_center_dist2(points, centers, p, 0);

  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index chosen;
    if (total <= 0) {
      chosen = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    } else {
      double target = rng.uniform() * total;
      chosen = n - 1;
      for (Eigen::Index p = 0; p < n; ++p) {
        target -= dist2[p];
        if (target <= 0) {
          chosen = p;
          break;
        }
      }
    }
    centers.row(c) = points.row(chosen);
    for (Eigen::Index p = 0; p < n; ++p)
      dist2[p] = std::min(dist2[p], point_center_dist2(points, centers, p, c));
  }
  return centers;
}

}  // namespace

KMeansResult kmeans_single(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                           int max_iters) {
  const auto n = points.rows();
  if (k < 1 || k > n) throw std::invalid_argument("kmeans: k out of range");

  Rng rng(seed);
  Eigen::MatrixXd centers = kmeanspp_seed(points, k, rng);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  KMeansResult result;

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double inertia = 0;
    for (Eigen::Index p = 0; p < n; ++p) {
      int best = 0;
      double best_d = point_center_dist2(points, centers, p, 0);
      for (int c = 1; c < k; ++c) {
        const double d = point_center_dist2(points, centers, p, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      inertia += best_d;
      if (labels[static_cast<std::size_t>(p)] != best) {
        labels[static_cast<std::size_t>(p)] = best;
        changed = true;
      }
    }
    result.inertia_trace.push_back(inertia);
    result.inertia = inertia;
    if (!changed) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index p = 0; p < n; ++p) {
      sums.row(labels[static_cast<std::size_t>(p)]) += points.row(p);
      counts[labels[static_cast<std::size_t>(p)]] += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // Re-seed an empty cluster at the point farthest from its center.
        Eigen::Index far = 0;
        double far_d = -1;
        for (Eigen::Index p = 0; p < n; ++p) {
          const double d = point_center_dist2(points, centers, p, labels[static_cast<std::size_t>(p)]);
          if (d > far_d) {
            far_d = d;
            far = p;
          }
        }
        centers.row(c) = points.row(far);
      }
    }
  }

  result.labels = std::move(labels);
  return result;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int restarts,
                    int max_iters) {
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be positive");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    KMeansResult run = kmeans_single(points, k, Rng::derive(seed, static_cast<std::uint64_t>(r)).next_u64(), max_iters);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

std::vector<int> spectral_cluster(const Eigen::MatrixXd& affinity, int k, std::uint64_t seed) {
  const auto n = affinity.rows();
  if (affinity.cols() != n) throw std::invalid_argument("spectral_cluster: affinity must be square");
  if (k < 2 || k > n) throw std::invalid_argument("spectral_cluster: k out of range [2, n]");

  Eigen::VectorXd inv_sqrt_degree(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = affinity.row(i).sum();
    inv_sqrt_degree[i] = d > 0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  const Eigen::MatrixXd laplacian =
      Eigen::MatrixXd::Identity(n, n) -
      (inv_sqrt_degree.asDiagonal() * affinity * inv_sqrt_degree.asDiagonal());

  const auto eig = symmetric_eig_smallest(laplacian, k);

  Eigen::MatrixXd embedding = eig.vectors;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0) embedding.row(i) /= norm;
  }

  return kmeans(embedding, k, seed).labels;
}

}  // namespace mvdsc
