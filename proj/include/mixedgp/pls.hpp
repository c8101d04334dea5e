#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace mixedgp {

/// Lexicographic matrix-to-vector index for the strict upper triangle:
/// psi(k, k', n) with 1 <= k < k' <= n maps onto {1, ..., n(n-1)/2}.
int psi_index(int k, int k_prime, int n_lev);

/// Thrown when PLS runs out of informative directions before reaching the
/// requested component count.
class PlsRankError : public std::runtime_error {
 public:
  PlsRankError(int achieved, int requested);
  int achieved_rank() const { return achieved_; }

 private:
  int achieved_;
};

/// Weights G, loadings Xi and rotation G* = G (Xi^T G)^-1, all p x d.
struct PlsProjection {
  Eigen::MatrixXd weights;
  Eigen::MatrixXd loadings;
  Eigen::MatrixXd rotation;

  int components() const { return static_cast<int>(rotation.cols()); }
  int input_dimension() const { return static_cast<int>(rotation.rows()); }
};

/// Single-response PLS regression. X is n_t x p, y length n_t; both are
/// centered internally. Each component's weight is the closed-form dominant
/// direction X^T y / ||X^T y|| with the sign fixed so the largest-magnitude
/// entry is positive.
PlsProjection pls_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int components);

/// Collapses d reduced hyperparameters onto the p input dimensions:
/// theta_j = sum_t (G*_j^t)^2 theta_hat_t.
Eigen::VectorXd collapse_continuous_theta(const PlsProjection& proj,
                                          const Eigen::VectorXd& theta_hat);

/// Rotation from the pair-relaxed level space (dimension L(L-1)/2) to the
/// reduced pair space (dimension l(l-1)/2), rows normalized to unit norm
/// with zero rows preserved.
struct MatrixPlsRotation {
  Eigen::MatrixXd rotation;  // D_in x D_out
  int level_count = 0;          // L
  int reduced_level_count = 0;  // l
  bool row_normalized = false;

  int input_dimension() const { return static_cast<int>(rotation.rows()); }
  int output_dimension() const { return static_cast<int>(rotation.cols()); }
};

/// Runs pls_fit with d = l(l-1)/2 on zeta-encoded data (n_t x L(L-1)/2,
/// entries 0/1) and row-normalizes the resulting rotation.
MatrixPlsRotation matrix_pls_fit(const Eigen::MatrixXd& zeta_doe, const Eigen::VectorXd& y,
                                 int level_count, int reduced_level_count);

/// Rebuilds the L x L symmetric unit-diagonal matrix from the reduced l x l
/// matrix through the squared rotation weights:
///   Theta_{j,j'} = sum_{t<t'} (G*_{psi(j,j',L)}^{psi(t,t',l)})^2 ThetaHat_{t,t'}.
/// With unit-norm rows and |ThetaHat| <= 1 every entry stays in [-1, 1].
Eigen::MatrixXd reconstruct_theta(const MatrixPlsRotation& rot, const Eigen::MatrixXd& reduced_theta);

}  // namespace mixedgp
