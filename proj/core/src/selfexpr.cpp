#include "mvdsc/selfexpr.hpp"

#include <stdexcept>
#include <string>

namespace mvdsc {

namespace {

void require_square(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols())
    throw std::invalid_argument(std::string(what) + ": matrix must be square, got " +
                                std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

void require_same_n(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows())
    throw std::invalid_argument(std::string(what) + ": size mismatch, " +
                                std::to_string(a.rows()) + " vs " + std::to_string(b.rows()));
}

}  // namespace

void SelfExprState::validate() const {
  require_square(common, "SelfExprState");
  if (!common.allFinite() || common.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("SelfExprState: common matrix must be finite with zero diagonal");
  for (const auto& z : views) {
    require_square(z, "SelfExprState");
    if (z.rows() != common.rows())
      throw std::invalid_argument("SelfExprState: view matrix size differs from common");
    if (!z.allFinite() || (z.rows() > 0 && z.diagonal().cwiseAbs().maxCoeff() != 0.0))
      throw std::invalid_argument("SelfExprState: view matrix must be finite with zero diagonal");
  }
}

Eigen::MatrixXd centering_matrix(int n) {
  if (n < 1) throw std::invalid_argument("centering_matrix: n must be positive");
  return Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
}

double self_expression_residual(const Eigen::MatrixXd& latent, const Eigen::MatrixXd& z) {
  require_square(z, "self_expression_residual");
  if (latent.cols() != z.rows())
    throw std::invalid_argument("self_expression_residual: latent has " +
                                std::to_string(latent.cols()) + " columns but Z is " +
                                std::to_string(z.rows()) + "x" + std::to_string(z.cols()));
  return (latent - latent * z).squaredNorm();
}

double hsic(const Eigen::MatrixXd& za, const Eigen::MatrixXd& zb) {
  require_square(za, "hsic");
  require_square(zb, "hsic");
  require_same_n(za, zb, "hsic");
  const int n = static_cast<int>(za.rows());
  if (n < 2) throw std::invalid_argument("hsic: n must be >= 2");
  const Eigen::MatrixXd h = centering_matrix(n);
  const Eigen::MatrixXd centered = h * zb * h;
  const double scale = 1.0 / (static_cast<double>(n - 1) * static_cast<double>(n - 1));
  // tr(Za * centered) without forming the product
  return scale * (za.array() * centered.transpose().array()).sum();
}

double diversity_reg(const std::vector<Eigen::MatrixXd>& z_views) {
  double sum = 0.0;
  for (std::size_t i = 0; i < z_views.size(); ++i)
    for (std::size_t j = i + 1; j < z_views.size(); ++j) sum += hsic(z_views[i], z_views[j]);
  return sum;
}

double universality_reg(const Eigen::MatrixXd& z, const std::vector<Eigen::MatrixXd>& z_views) {
  double sum = 0.0;
  for (const auto& zi : z_views) {
    require_same_n(z, zi, "universality_reg");
    sum += (z - zi).squaredNorm();
  }
  return sum;
}

LossBreakdown total_loss(const std::vector<ViewActivations>& views,
                         const SelfExprState& state, const Weights& weights) {
  if (views.size() != state.views.size())
    throw std::invalid_argument("total_loss: activation count differs from view matrix count");

  LossBreakdown loss;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    if (v.recon_s.rows() != v.input.rows() || v.recon_s.cols() != v.input.cols() ||
        v.recon_c.rows() != v.input.rows() || v.recon_c.cols() != v.input.cols())
      throw std::invalid_argument("total_loss: reconstruction shape differs from input");
    loss.ae += (v.input - v.recon_s).squaredNorm() + (v.input - v.recon_c).squaredNorm();
    loss.self_expr += self_expression_residual(v.latent_s, state.views[i]);
    loss.self_expr += self_expression_residual(v.latent_c, state.common);
    loss.lp += state.views[i].squaredNorm();
  }
  loss.lp += state.common.squaredNorm();
  loss.universality = universality_reg(state.common, state.views);
  loss.diversity = diversity_reg(state.views);
  loss.total = loss.ae + weights.lambda1 * loss.self_expr + weights.lambda2 * loss.lp +
               weights.lambda3 * loss.universality + weights.lambda4 * loss.diversity;
  return loss;
}

Eigen::MatrixXd grad_z_view(int view, const Eigen::MatrixXd& latent_s,
                            const SelfExprState& state, const Weights& weights) {
  if (view < 0 || view >= state.n_views()) throw std::invalid_argument("grad_z_view: view index out of range");
  const auto& zi = state.views[static_cast<std::size_t>(view)];
  const int n = state.n();
  if (latent_s.cols() != n) throw std::invalid_argument("grad_z_view: latent column count differs from n");

  const Eigen::MatrixXd gram = latent_s.transpose() * latent_s;
  Eigen::MatrixXd grad = 2.0 * weights.lambda1 * gram * (zi - Eigen::MatrixXd::Identity(n, n));
  grad.noalias() -= 2.0 * weights.lambda3 * (state.common - zi);
  grad.noalias() += 2.0 * weights.lambda2 * zi;

  if (weights.lambda4 != 0.0 && state.n_views() > 1) {
    const Eigen::MatrixXd h = centering_matrix(n);
    const double scale = weights.lambda4 / (static_cast<double>(n - 1) * static_cast<double>(n - 1));
    for (int j = 0; j < state.n_views(); ++j) {
      if (j == view) continue;
      grad.noalias() += scale * (h * state.views[static_cast<std::size_t>(j)] * h).transpose();
    }
  }
  return project_zero_diag(std::move(grad));
}

Eigen::MatrixXd grad_z_common(const std::vector<Eigen::MatrixXd>& latents_c,
                              const SelfExprState& state, const Weights& weights) {
  if (latents_c.size() != state.views.size())
    throw std::invalid_argument("grad_z_common: latent count differs from view count");
  const int n = state.n();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n, n);
  for (const auto& latent : latents_c) {
    if (latent.cols() != n) throw std::invalid_argument("grad_z_common: latent column count differs from n");
    grad.noalias() += 2.0 * weights.lambda1 * (latent.transpose() * latent) * (state.common - identity);
  }
  grad.noalias() += 2.0 * weights.lambda2 * state.common;
  for (const auto& zi : state.views) grad.noalias() += 2.0 * weights.lambda3 * (state.common - zi);
  return project_zero_diag(std::move(grad));
}

Eigen::MatrixXd grad_latent(const Eigen::MatrixXd& latent, const Eigen::MatrixXd& z,
                            double lambda1) {
  require_square(z, "grad_latent");
  if (latent.cols() != z.rows())
    throw std::invalid_argument("grad_latent: latent column count differs from n");
  const Eigen::MatrixXd residual = latent - latent * z;
  return 2.0 * lambda1 * residual * (Eigen::MatrixXd::Identity(z.rows(), z.cols()) - z).transpose();
}

Eigen::MatrixXd project_zero_diag(Eigen::MatrixXd m) {
  require_square(m, "project_zero_diag");
  m.diagonal().setZero();
  return m;
}

}  // namespace mvdsc
