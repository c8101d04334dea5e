#include "mixedgp/pls.hpp"

#include <cmath>
#include <string>

namespace mixedgp {

int psi_index(int k, int k_prime, int n_lev) {
  if (n_lev < 2 || k < 1 || k_prime <= k || k_prime > n_lev) {
    throw std::invalid_argument("psi_index: need 1 <= k < k' <= n_lev");
  }
  const long n = n_lev;
  const long head = ((n - 1) * (n - 2) - (n - k) * (n - k - 1)) / 2;
  return static_cast<int>(head + k_prime - 1);
}

PlsRankError::PlsRankError(int achieved, int requested)
    : std::runtime_error("pls_fit: only " + std::to_string(achieved) +
                         " informative component(s) available, " + std::to_string(requested) +
                         " requested"),
      achieved_(achieved) {}

PlsProjection pls_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int components) {
  const auto n_t = X.rows();
  const auto p = X.cols();
  if (n_t < 2 || n_t != y.size()) throw std::invalid_argument("pls_fit: bad data shape");
  if (components < 1 || components > p || components > n_t - 1) {
    throw std::invalid_argument("pls_fit: components must be in 1..min(p, n_t-1)");
  }

  Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
  Eigen::VectorXd yc = y.array() - y.mean();
  const double y_scale = yc.norm();
  if (y_scale <= 1e-14 * std::max(1.0, std::abs(y.mean()))) {
    throw std::invalid_argument("pls_fit: zero-variance response");
  }
  const double rank_tol = 1e-12 * std::max(1.0, Xc.norm() * y_scale);

  PlsProjection proj;
  proj.weights.resize(p, components);
  proj.loadings.resize(p, components);

  for (int t = 0; t < components; ++t) {
    Eigen::VectorXd cross = Xc.transpose() * yc;
    if (cross.norm() <= rank_tol) throw PlsRankError(t, components);

    Eigen::VectorXd g = cross / cross.norm();
    // deterministic sign: largest-magnitude entry positive
    Eigen::Index imax = 0;
    g.cwiseAbs().maxCoeff(&imax);
    if (g[imax] < 0.0) g = -g;

    Eigen::VectorXd h = Xc * g;
    const double h2 = h.squaredNorm();
    if (h2 <= 0.0) throw PlsRankError(t, components);
    Eigen::VectorXd xi = Xc.transpose() * h / h2;
    const double gamma = yc.dot(h) / h2;

    proj.weights.col(t) = g;
    proj.loadings.col(t) = xi;
    Xc.noalias() -= h * xi.transpose();
    yc.noalias() -= gamma * h;
  }

  Eigen::MatrixXd xtg = proj.loadings.transpose() * proj.weights;  // d x d
  proj.rotation = proj.weights * xtg.inverse();
  return proj;
}

Eigen::VectorXd collapse_continuous_theta(const PlsProjection& proj,
                                          const Eigen::VectorXd& theta_hat) {
  if (theta_hat.size() != proj.components()) {
    throw std::invalid_argument("collapse_continuous_theta: dimension mismatch");
  }
  if ((theta_hat.array() < 0.0).any()) {
    throw std::invalid_argument("collapse_continuous_theta: negative reduced hyperparameter");
  }
  return proj.rotation.array().square().matrix() * theta_hat;
}

MatrixPlsRotation matrix_pls_fit(const Eigen::MatrixXd& zeta_doe, const Eigen::VectorXd& y,
                                 int level_count, int reduced_level_count) {
  if (reduced_level_count < 2 || reduced_level_count >= level_count) {
    throw std::invalid_argument("matrix_pls_fit: need 2 <= l < L");
  }
  const int d_in = level_count * (level_count - 1) / 2;
  const int d_out = reduced_level_count * (reduced_level_count - 1) / 2;
  if (zeta_doe.cols() != d_in) {
    throw std::invalid_argument("matrix_pls_fit: zeta data has wrong width");
  }

  PlsProjection proj = pls_fit(zeta_doe, y, d_out);

  MatrixPlsRotation rot;
  rot.rotation = proj.rotation;
  rot.level_count = level_count;
  rot.reduced_level_count = reduced_level_count;
  for (int r = 0; r < rot.rotation.rows(); ++r) {
    const double norm = rot.rotation.row(r).norm();
    if (norm > 0.0) rot.rotation.row(r) /= norm;
  }
  rot.row_normalized = true;
  return rot;
}

Eigen::MatrixXd reconstruct_theta(const MatrixPlsRotation& rot,
                                  const Eigen::MatrixXd& reduced_theta) {
  const int L = rot.level_count;
  const int l = rot.reduced_level_count;
  if (!rot.row_normalized) {
    throw std::invalid_argument("reconstruct_theta: rotation must be row-normalized");
  }
  if (reduced_theta.rows() != l || reduced_theta.cols() != l) {
    throw std::invalid_argument("reconstruct_theta: reduced matrix has wrong shape");
  }

  Eigen::MatrixXd theta = Eigen::MatrixXd::Identity(L, L);
  for (int j = 1; j <= L; ++j) {
    for (int jp = j + 1; jp <= L; ++jp) {
      const int row = psi_index(j, jp, L) - 1;
      double sum = 0.0;
      for (int t = 1; t <= l; ++t) {
        for (int tp = t + 1; tp <= l; ++tp) {
          const double w = rot.rotation(row, psi_index(t, tp, l) - 1);
          sum += w * w * reduced_theta(t - 1, tp - 1);
        }
      }
      theta(j - 1, jp - 1) = sum;
      theta(jp - 1, j - 1) = sum;
    }
  }
  return theta;
}

}  // namespace mixedgp
