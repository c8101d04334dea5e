#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixedgp/categorical_kernel.hpp"
#include "mixedgp/design_space.hpp"

namespace mixedgp {

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when the nugget ladder is exhausted without a successful
/// factorization; carries the smallest pivot seen at the last rung.
class NonSpdError : public NumericalError {
 public:
  NonSpdError(const std::string& what, double smallest_pivot)
      : NumericalError(what), smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

enum class ContinuousKernelType { kSquaredExponential, kAbsoluteExponential };

enum class CategoricalKernelKind { kGd, kCr, kEhh, kHh, kHhPls, kEhhPls };

std::string to_string(CategoricalKernelKind kind);
std::string to_string(ContinuousKernelType kind);

/// Mixed product-kernel configuration. categorical_kinds has one entry per
/// categorical variable. continuous_pls collapses the continuous/integer
/// block to d hyperparameters; cr_pls instead runs a single PLS over the
/// fully relaxed space (and then owns the whole kernel).
struct KernelConfig {
  ContinuousKernelType continuous_kernel = ContinuousKernelType::kSquaredExponential;
  std::vector<CategoricalKernelKind> categorical_kinds;
  int pls_level_count = 2;  // l for the *_PLS kinds
  std::optional<int> continuous_pls;
  bool cr_pls = false;
  double epsilon = kDefaultEpsilon;
};

/// Builds a config from a kernel family name: one of gd, cr, ehh, hh,
/// hh-pls, ehh-pls, cr-pls (applied to every categorical variable).
KernelConfig kernel_config_from_name(const DesignSpace& space, const std::string& name,
                                     int pls_levels = 2,
                                     std::optional<int> continuous_components = std::nullopt);

struct HyperparameterBound {
  double lower = 0.0;
  double upper = 1.0;
  bool log_scale = false;  // optimized as log(theta) when set
};

/// Number of hyperparameters the config requires on this space.
int hyperparameter_count(const DesignSpace& space, const KernelConfig& config);

/// Cholesky factor of R + nugget*I, trying the ladder 0, 1e-12, 1e-10, ...,
/// 1e-4 and keeping the first success.
struct SpdFactorization {
  Eigen::MatrixXd lower;
  double nugget = 0.0;
};
SpdFactorization ensure_spd(const Eigen::MatrixXd& R);

namespace detail {
class KernelModel;
struct GpInternals;
}  // namespace detail

struct FitOptions {
  int starts = 10;
  std::uint64_t seed = 0;
  long max_evals_per_start = 0;  // 0 -> 150 * dimension
  double step_tol_rel = 1e-4;
  bool parallel = true;
};

struct StartResult {
  double final_log_likelihood = 0.0;
  long evaluations = 0;
};

struct FitReport {
  double best_log_likelihood = 0.0;
  std::vector<StartResult> starts;
  long total_evaluations = 0;
  double wall_seconds = 0.0;
  int hyperparameter_count = 0;
  std::vector<std::string> warnings;
};

/// Fitted model: data, packed hyperparameters and the factorized correlation
/// matrix. Immutable; predictions are safe to call concurrently.
class TrainedGp {
 public:
  const DesignSpace& space() const;
  const KernelConfig& config() const;
  const Doe& doe() const;
  const Eigen::VectorXd& theta() const;

  double mu_hat() const;
  double sigma2_hat() const;
  double nugget() const;
  bool constant_model() const;

  double predict_mean(const MixedPoint& w) const;
  double predict_variance(const MixedPoint& w) const;

  /// Fitted L x L level-correlation matrix of one categorical variable.
  Eigen::MatrixXd level_matrix(std::size_t cat_index) const;

 private:
  friend struct detail::GpInternals;
  TrainedGp() = default;
  std::shared_ptr<const detail::GpInternals> impl_;
};

struct FitResult {
  TrainedGp gp;
  FitReport report;
};

/// Maximizes the concentrated log-likelihood by multistart bounded pattern
/// search (theta-like entries in log scale, angles linear). Responses are
/// standardized internally; mu_hat/sigma2_hat come back in original units.
FitResult fit(const DesignSpace& space, const Doe& doe, const KernelConfig& config,
              const FitOptions& options = {});

/// Rebuilds a TrainedGp from its serialized parts, reusing the stored nugget
/// instead of re-running the ladder.
TrainedGp assemble_trained_gp(const DesignSpace& space, const KernelConfig& config, const Doe& doe,
                              const Eigen::VectorXd& theta, double nugget);

// Operation-style entry points. These prepare the data-derived kernel state
// (scaling, PLS projections) on every call; fit() keeps it cached instead.

/// Product of the continuous, integer and categorical correlation factors.
double kernel_eval(const DesignSpace& space, const KernelConfig& config,
                   const Eigen::VectorXd& theta, const MixedPoint& a, const MixedPoint& b,
                   const Doe* doe_for_pls = nullptr);

Eigen::MatrixXd correlation_matrix(const DesignSpace& space, const KernelConfig& config,
                                   const Eigen::VectorXd& theta, const Doe& doe);

/// Concentrated log-likelihood with the profiled constant mean:
///   mu = (1^T R^-1 y) / (1^T R^-1 1),  s2 = (y-mu)^T R^-1 (y-mu) / n_t,
///   ll = -1/2 (n_t log s2 + log|R| + n_t (1 + log 2 pi)).
/// Returns -inf when the profile degenerates (s2 = 0).
double log_likelihood(const DesignSpace& space, const KernelConfig& config,
                      const Eigen::VectorXd& theta, const Doe& doe);

}  // namespace mixedgp
