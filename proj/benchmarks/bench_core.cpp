#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "mvdsc/autoencoder.hpp"
#include "mvdsc/selfexpr.hpp"
#include "mvdsc/spectral.hpp"

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = dist(gen);
  return m;
}

void BM_Hsic(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd a = random_matrix(n, n, 1);
  const Eigen::MatrixXd b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mvdsc::hsic(a, b));
}
BENCHMARK(BM_Hsic)->Arg(32)->Arg(64)->Arg(128);

void BM_GradZView(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  mvdsc::SelfExprState s;
  s.common = mvdsc::project_zero_diag(random_matrix(n, n, 3));
  s.views = {mvdsc::project_zero_diag(random_matrix(n, n, 4)),
             mvdsc::project_zero_diag(random_matrix(n, n, 5))};
  const Eigen::MatrixXd latent = random_matrix(16, n, 6);
  const mvdsc::Weights w;
  for (auto _ : state) benchmark::DoNotOptimize(mvdsc::grad_z_view(0, latent, s, w));
}
BENCHMARK(BM_GradZView)->Arg(60)->Arg(120);

void BM_ConvEncode(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto spec = mvdsc::AutoencoderSpec::conv({1, 16, 16}, {16, 8, 4});
  const auto params = mvdsc::init_params(spec, 7);
  const Eigen::MatrixXd x = random_matrix(256, n, 8);
  for (auto _ : state) {
    mvdsc::ForwardCache cache;
    benchmark::DoNotOptimize(mvdsc::encode(params, x, cache));
  }
}
BENCHMARK(BM_ConvEncode)->Arg(8)->Arg(32);

void BM_JacobiEigen(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Eigen::MatrixXd m = random_matrix(n, n, 9);
  m = ((m + m.transpose()) / 2).eval();
  for (auto _ : state) benchmark::DoNotOptimize(mvdsc::jacobi_eigen(m));
}
BENCHMARK(BM_JacobiEigen)->Arg(32)->Arg(64);

void BM_SpectralCluster(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd a = mvdsc::build_affinity(random_matrix(n, n, 10));
  for (auto _ : state) benchmark::DoNotOptimize(mvdsc::spectral_cluster(a, 3, 11));
}
BENCHMARK(BM_SpectralCluster)->Arg(60);

}  // namespace

BENCHMARK_MAIN();
