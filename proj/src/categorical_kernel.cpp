#include "mixedgp/categorical_kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mixedgp {

namespace {

void check_level(int level, int count) {
  if (level < 1 || level > count) {
    throw std::invalid_argument("level index " + std::to_string(level) + " outside 1.." +
                                std::to_string(count));
  }
}

// Squared-weight sum of the reconstruction at one level pair:
//   sum_{t<t'} (G*_{psi(a,b,L)}^{psi(t,t',l)})^2 source_{t,t'}.
double reduced_sum(const MatrixPlsRotation& rot, const Eigen::MatrixXd& source, int level_a,
                   int level_b) {
  const int L = rot.level_count;
  const int l = rot.reduced_level_count;
  const int row = psi_index(std::min(level_a, level_b), std::max(level_a, level_b), L) - 1;
  double sum = 0.0;
  for (int t = 1; t <= l; ++t) {
    for (int tp = t + 1; tp <= l; ++tp) {
      const double w = rot.rotation(row, psi_index(t, tp, l) - 1);
      sum += w * w * source(t - 1, tp - 1);
    }
  }
  return sum;
}

}  // namespace

Eigen::MatrixXd hypersphere_factor(const HypersphereAngles& a) {
  const int L = a.level_count;
  const std::size_t expected = static_cast<std::size_t>(L) * (L - 1) / 2;
  if (L < 1 || a.angles.size() != expected) {
    throw std::invalid_argument("hypersphere_factor: angle count does not match level count");
  }
  for (double angle : a.angles) {
    if (!(angle >= 0.0 && angle <= M_PI)) {
      throw std::invalid_argument("hypersphere_factor: angles must lie in [0, pi]");
    }
  }

  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(L, L);
  c(0, 0) = 1.0;
  std::size_t next = 0;  // row k consumes the next k-1 angles
  for (int k = 1; k < L; ++k) {
    double sin_prod = 1.0;
    for (int j = 0; j < k; ++j) {
      const double angle = a.angles[next + j];
      c(k, j) = sin_prod * std::cos(angle);
      sin_prod *= std::sin(angle);
    }
    c(k, k) = sin_prod;
    next += k;
  }
  return c;
}

int param_level_count(const CategoricalKernelParam& p) {
  return std::visit(
      [](const auto& arg) -> int {
        using T = std::decay_t<decltype(arg)>;
        if constexpr (std::is_same_v<T, GdParam>) {
          return arg.level_count;
        } else if constexpr (std::is_same_v<T, CrParam>) {
          return static_cast<int>(arg.diag.size());
        } else if constexpr (std::is_same_v<T, EhhParam> || std::is_same_v<T, HhParam>) {
          return arg.angles.level_count;
        } else {
          return arg.rotation.level_count;
        }
      },
      p);
}

double level_correlation_pls(const HhPlsParam& p, int level_a, int level_b) {
  const int L = p.rotation.level_count;
  check_level(level_a, L);
  check_level(level_b, L);
  if (level_a == level_b) return 1.0;
  const Eigen::MatrixXd c = hypersphere_factor(p.reduced_angles);
  const Eigen::MatrixXd rho = c * c.transpose();
  return reduced_sum(p.rotation, rho, level_a, level_b);
}

double level_correlation_pls(const EhhPlsParam& p, int level_a, int level_b) {
  const int L = p.rotation.level_count;
  check_level(level_a, L);
  check_level(level_b, L);
  if (level_a == level_b) return 1.0;
  const Eigen::MatrixXd c = hypersphere_factor(p.reduced_angles);
  const Eigen::MatrixXd rho = c * c.transpose();
  const double log_eps = std::log(p.epsilon);
  const Eigen::MatrixXd source = 0.5 * log_eps * (rho.array() - 1.0).matrix();
  const double phi = reduced_sum(p.rotation, source, level_a, level_b);
  return std::exp(-2.0 * phi);
}

double level_correlation(const CategoricalKernelParam& p, int level_a, int level_b) {
  const int L = param_level_count(p);
  check_level(level_a, L);
  check_level(level_b, L);
  if (level_a == level_b) return 1.0;

  return std::visit(
      [&](const auto& arg) -> double {
        using T = std::decay_t<decltype(arg)>;
        if constexpr (std::is_same_v<T, GdParam>) {
          if (arg.theta < 0.0) throw std::invalid_argument("GD theta must be nonnegative");
          return std::exp(-arg.theta);
        } else if constexpr (std::is_same_v<T, CrParam>) {
          const double da = arg.diag[level_a - 1];
          const double db = arg.diag[level_b - 1];
          if (da < 0.0 || db < 0.0) throw std::invalid_argument("CR diagonal must be nonnegative");
          return std::exp(-da - db);
        } else if constexpr (std::is_same_v<T, EhhParam>) {
          const Eigen::MatrixXd c = hypersphere_factor(arg.angles);
          const double rho = c.row(level_a - 1).dot(c.row(level_b - 1));
          return std::pow(arg.epsilon, 1.0 - rho);
        } else if constexpr (std::is_same_v<T, HhParam>) {
          const Eigen::MatrixXd c = hypersphere_factor(arg.angles);
          return c.row(level_a - 1).dot(c.row(level_b - 1));
        } else {
          return level_correlation_pls(arg, level_a, level_b);
        }
      },
      p);
}

Eigen::MatrixXd build_level_matrix(const CategoricalKernelParam& p) {
  const int L = param_level_count(p);
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(L, L);
  const auto fill = [&](auto&& entry) {
    for (int a = 1; a <= L; ++a) {
      for (int b = a + 1; b <= L; ++b) {
        const double value = entry(a, b);
        r(a - 1, b - 1) = value;
        r(b - 1, a - 1) = value;
      }
    }
  };

  std::visit(
      [&](const auto& arg) {
        using T = std::decay_t<decltype(arg)>;
        if constexpr (std::is_same_v<T, GdParam>) {
          if (arg.theta < 0.0) throw std::invalid_argument("GD theta must be nonnegative");
          const double value = std::exp(-arg.theta);
          fill([&](int, int) { return value; });
        } else if constexpr (std::is_same_v<T, CrParam>) {
          for (double d : arg.diag) {
            if (d < 0.0) throw std::invalid_argument("CR diagonal must be nonnegative");
          }
          fill([&](int a, int b) { return std::exp(-arg.diag[a - 1] - arg.diag[b - 1]); });
        } else if constexpr (std::is_same_v<T, EhhParam>) {
          const Eigen::MatrixXd c = hypersphere_factor(arg.angles);
          const Eigen::MatrixXd rho = c * c.transpose();
          fill([&](int a, int b) { return std::pow(arg.epsilon, 1.0 - rho(a - 1, b - 1)); });
        } else if constexpr (std::is_same_v<T, HhParam>) {
          const Eigen::MatrixXd c = hypersphere_factor(arg.angles);
          const Eigen::MatrixXd rho = c * c.transpose();
          fill([&](int a, int b) { return rho(a - 1, b - 1); });
        } else if constexpr (std::is_same_v<T, HhPlsParam>) {
          const Eigen::MatrixXd c = hypersphere_factor(arg.reduced_angles);
          const Eigen::MatrixXd rho = c * c.transpose();
          fill([&](int a, int b) { return reduced_sum(arg.rotation, rho, a, b); });
        } else {
          const Eigen::MatrixXd c = hypersphere_factor(arg.reduced_angles);
          const Eigen::MatrixXd rho = c * c.transpose();
          const Eigen::MatrixXd source =
              0.5 * std::log(arg.epsilon) * (rho.array() - 1.0).matrix();
          fill([&](int a, int b) {
            return std::exp(-2.0 * reduced_sum(arg.rotation, source, a, b));
          });
        }
      },
      p);
  return r;
}

}  // namespace mixedgp
