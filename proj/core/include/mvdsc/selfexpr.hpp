#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mvdsc {

/// Term weights of the training objective: lambda1 self-representation,
/// lambda2 Frobenius-norm penalty, lambda3 universality (alignment of each
/// view-specific matrix with the common one), lambda4 pairwise-dependence
/// diversity.
struct Weights {
  double lambda1 = 10.0;
  double lambda2 = 1.0;
  double lambda3 = 0.1;
  double lambda4 = 0.1;
};

/// The self-representation matrices: one per view plus the shared one.
/// Invariant: all are n x n with exactly zero diagonals.
struct SelfExprState {
  Eigen::MatrixXd common;                 // Z
  std::vector<Eigen::MatrixXd> views;     // Z_i

  int n() const { return static_cast<int>(common.rows()); }
  int n_views() const { return static_cast<int>(views.size()); }
  void validate() const;
};

/// Unweighted per-term loss values; `total` carries the weighted sum
/// ae + l1*self_expr + l2*lp + l3*universality + l4*diversity.
struct LossBreakdown {
  double ae = 0;
  double self_expr = 0;
  double lp = 0;
  double universality = 0;
  double diversity = 0;
  double total = 0;
};

/// Per-view tensors the loss is assembled from. All matrices hold samples
/// as columns.
struct ViewActivations {
  Eigen::MatrixXd input;     // X_i, d_i x n
  Eigen::MatrixXd latent_s;  // F_i^s (view-specific branch)
  Eigen::MatrixXd latent_c;  // F_i^c (common branch)
  Eigen::MatrixXd recon_s;   // Xhat_i^s
  Eigen::MatrixXd recon_c;   // Xhat_i^c
};

/// H = I - (1/n) 11^T. Symmetric, idempotent, zero row sums.
Eigen::MatrixXd centering_matrix(int n);

/// ||F - F Z||_F^2.
double self_expression_residual(const Eigen::MatrixXd& latent, const Eigen::MatrixXd& z);

/// Empirical dependence estimator (n-1)^{-2} tr(Za H Zb H) with the
/// representation matrices used directly as Gram matrices.
double hsic(const Eigen::MatrixXd& za, const Eigen::MatrixXd& zb);

/// Sum of hsic over unordered view pairs i < j; 0 for a single view.
double diversity_reg(const std::vector<Eigen::MatrixXd>& z_views);

/// Sum_i ||Z - Z_i||_F^2.
double universality_reg(const Eigen::MatrixXd& z, const std::vector<Eigen::MatrixXd>& z_views);

LossBreakdown total_loss(const std::vector<ViewActivations>& views,
                         const SelfExprState& state, const Weights& weights);

/// Gradient of the objective with respect to Z_i, diagonal projected to
/// zero:
///   2 l1 (F_i^s)^T F_i^s (Z_i - I) - 2 l3 (Z - Z_i) + 2 l2 Z_i
///   + l4 (n-1)^{-2} sum_{j != i} (H Z_j H)^T
Eigen::MatrixXd grad_z_view(int view, const Eigen::MatrixXd& latent_s,
                            const SelfExprState& state, const Weights& weights);

/// Gradient of the objective with respect to the common Z, diagonal
/// projected to zero:
///   2 l1 sum_i (F_i^c)^T F_i^c (Z - I) + 2 l2 Z + 2 l3 sum_i (Z - Z_i)
Eigen::MatrixXd grad_z_common(const std::vector<Eigen::MatrixXd>& latents_c,
                              const SelfExprState& state, const Weights& weights);

/// Gradient of l1 ||F - F Z||_F^2 with respect to F: 2 l1 (F - FZ)(I - Z)^T.
Eigen::MatrixXd grad_latent(const Eigen::MatrixXd& latent, const Eigen::MatrixXd& z,
                            double lambda1);

/// Returns m with its diagonal zeroed; off-diagonal entries unchanged.
Eigen::MatrixXd project_zero_diag(Eigen::MatrixXd m);

}  // namespace mvdsc
