#include <doctest.h>

#include <random>

#include "mvdsc/metrics.hpp"
#include "mvdsc/spectral.hpp"
#include "testutil.hpp"

using namespace mvdsc;
using doctest::Approx;

namespace {

// block-diagonal affinity with given block sizes and weights
Eigen::MatrixXd block_affinity(const std::vector<int>& sizes, double inside, double outside) {
  int n = 0;
  for (int s : sizes) n += s;
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n, n, outside);
  int offset = 0;
  for (int s : sizes) {
    a.block(offset, offset, s, s).setConstant(inside);
    offset += s;
  }
  a.diagonal().setZero();
  return a;
}

std::vector<int> block_labels(const std::vector<int>& sizes) {
  std::vector<int> labels;
  for (std::size_t c = 0; c < sizes.size(); ++c)
    labels.insert(labels.end(), static_cast<std::size_t>(sizes[c]), static_cast<int>(c));
  return labels;
}

}  // namespace

TEST_CASE("build_affinity fixed points and hand case") {
  std::mt19937 gen(1);
  Eigen::MatrixXd sym = testutil::random_matrix(5, 5, gen, 0.0, 1.0);
  sym = ((sym + sym.transpose()) / 2).eval();
  CHECK((build_affinity(sym) - sym).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
  z(1, 2) = -4.0;
  z(2, 1) = 2.0;
  const Eigen::MatrixXd a = build_affinity(z);
  CHECK(a(1, 2) == Approx(3.0));
  CHECK(a(2, 1) == Approx(3.0));
  CHECK(a(0, 0) == 0.0);

  const Eigen::MatrixXd r = testutil::random_matrix(6, 6, gen);
  const Eigen::MatrixXd ar = build_affinity(r);
  CHECK((ar - ar.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(ar.minCoeff() >= 0.0);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      CHECK(ar(i, j) == Approx((std::abs(r(i, j)) + std::abs(r(j, i))) / 2).epsilon(1e-15));

  CHECK_THROWS_AS(build_affinity(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("jacobi eigendecomposition basics") {
  Eigen::VectorXd diag(4);
  diag << 3.0, -1.0, 2.0, 0.5;
  const auto eig_diag = jacobi_eigen(diag.asDiagonal().toDenseMatrix());
  CHECK(eig_diag.values(0) == Approx(-1.0));
  CHECK(eig_diag.values(1) == Approx(0.5));
  CHECK(eig_diag.values(2) == Approx(2.0));
  CHECK(eig_diag.values(3) == Approx(3.0));

  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, 2;
  const auto eig = jacobi_eigen(m);
  CHECK(eig.values(0) == Approx(1.0));
  CHECK(eig.values(1) == Approx(3.0));
}

TEST_CASE("jacobi reconstructs random symmetric matrices") {
  std::mt19937 gen(2);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd m = testutil::random_matrix(8, 8, gen);
    m = ((m + m.transpose()) / 2).eval();
    const auto eig = jacobi_eigen(m);

    // VᵀMV diagonal within 1e-8
    const Eigen::MatrixXd d = eig.vectors.transpose() * m * eig.vectors;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        if (i != j) CHECK(std::abs(d(i, j)) < 1e-8);

    // residuals and orthonormality
    for (int j = 0; j < 8; ++j) {
      const double residual = (m * eig.vectors.col(j) - eig.values(j) * eig.vectors.col(j)).norm();
      CHECK(residual < 1e-8 * m.norm());
    }
    CHECK((eig.vectors.transpose() * eig.vectors - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-8);

    // ascending order
    for (int j = 1; j < 8; ++j) CHECK(eig.values(j) >= eig.values(j - 1));
  }
}

TEST_CASE("symmetric_eig_smallest returns the k smallest pairs") {
  std::mt19937 gen(3);
  Eigen::MatrixXd m = testutil::random_matrix(7, 7, gen);
  m = ((m + m.transpose()) / 2).eval();
  const auto full = jacobi_eigen(m);
  const auto part = symmetric_eig_smallest(m, 3);
  REQUIRE(part.values.size() == 3);
  for (int j = 0; j < 3; ++j) CHECK(part.values(j) == Approx(full.values(j)));
  CHECK_THROWS_AS(symmetric_eig_smallest(m, 0), std::invalid_argument);
  CHECK_THROWS_AS(symmetric_eig_smallest(m, 8), std::invalid_argument);
}

TEST_CASE("jacobi rejects non-symmetric input") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  CHECK_THROWS_AS(jacobi_eigen(m), std::invalid_argument);
}

TEST_CASE("kmeans inertia never increases across Lloyd iterations") {
  std::mt19937 gen(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd points = testutil::random_matrix(40, 3, gen);
    const auto result = kmeans_single(points, 4, gen());
    for (std::size_t i = 1; i < result.inertia_trace.size(); ++i)
      CHECK(result.inertia_trace[i] <= result.inertia_trace[i - 1] + 1e-12);
  }
}

TEST_CASE("kmeans recovers separated blobs") {
  std::mt19937 gen(5);
  Eigen::MatrixXd points(30, 2);
  for (int i = 0; i < 30; ++i) {
    const int c = i / 10;
    points(i, 0) = 10.0 * c + 0.1 * std::uniform_real_distribution<double>(-1, 1)(gen);
    points(i, 1) = 0.1 * std::uniform_real_distribution<double>(-1, 1)(gen);
  }
  const auto result = kmeans(points, 3, 7);
  const auto truth = block_labels({10, 10, 10});
  CHECK(acc(truth, result.labels) == Approx(1.0));
}

TEST_CASE("exact block-diagonal affinities are recovered") {
  for (int k : {2, 3, 4}) {
    std::vector<int> sizes;
    for (int c = 0; c < k; ++c) sizes.push_back(5 + c);
    const Eigen::MatrixXd a = block_affinity(sizes, 1.0, 0.0);
    const auto labels = spectral_cluster(a, k, 11);
    CHECK(acc(block_labels(sizes), labels) == Approx(1.0));
  }
}

TEST_CASE("noisy planted blocks are recovered") {
  const std::vector<int> sizes{8, 8, 8};
  const Eigen::MatrixXd a = block_affinity(sizes, 1.0, 0.01);
  const auto labels = spectral_cluster(a, 3, 13);
  CHECK(acc(block_labels(sizes), labels) == Approx(1.0));
}

TEST_CASE("spectral clustering is equivariant under sample permutation") {
  const std::vector<int> sizes{4, 4, 4};
  const Eigen::MatrixXd a = block_affinity(sizes, 1.0, 0.05);
  const auto base = spectral_cluster(a, 3, 17);

  std::mt19937 gen(18);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  Eigen::MatrixXd ap(12, 12);
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j) ap(i, j) = a(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  const auto permuted = spectral_cluster(ap, 3, 17);

  std::vector<int> base_permuted(12);
  for (int i = 0; i < 12; ++i) base_permuted[static_cast<std::size_t>(i)] = base[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  CHECK(acc(base_permuted, permuted) == Approx(1.0));
}

TEST_CASE("spectral clustering is invariant under affinity scaling") {
  const std::vector<int> sizes{6, 5, 7};
  const Eigen::MatrixXd a = block_affinity(sizes, 1.0, 0.02);
  const auto l1 = spectral_cluster(a, 3, 19);
  const auto l2 = spectral_cluster(37.5 * a, 3, 19);
  CHECK(acc(l1, l2) == Approx(1.0));
}

TEST_CASE("laplacian eigenvalues are non-negative within tolerance") {
  std::mt19937 gen(20);
  Eigen::MatrixXd z = testutil::random_matrix(12, 12, gen);
  const Eigen::MatrixXd a = build_affinity(z);
  Eigen::VectorXd inv_sqrt(12);
  for (int i = 0; i < 12; ++i) {
    const double d = a.row(i).sum();
    inv_sqrt(i) = d > 0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  const Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(12, 12) -
                              (inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal());
  const auto eig = jacobi_eigen(lap);
  CHECK(eig.values.minCoeff() >= -1e-10);
}

TEST_CASE("isolated vertices are tolerated") {
  Eigen::MatrixXd a = block_affinity({4, 4}, 1.0, 0.0);
  a.row(0).setZero();
  a.col(0).setZero();  // vertex 0 isolated
  const auto labels = spectral_cluster(a, 2, 23);
  CHECK(labels.size() == 8);
}

TEST_CASE("k out of range is rejected") {
  const Eigen::MatrixXd a = block_affinity({3, 3}, 1.0, 0.0);
  CHECK_THROWS_AS(spectral_cluster(a, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(spectral_cluster(a, 7, 1), std::invalid_argument);
}
