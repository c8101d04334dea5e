#include "mixedgp/gp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <iterator>
#include <limits>
#include <random>
#include <thread>

#include "mixedgp/local_search.hpp"
#include "mixedgp/pls.hpp"

namespace mixedgp {

namespace {

constexpr double kThetaLower = 1e-6;
constexpr double kThetaUpper = 20.0;
constexpr double kCrLower = 5e-7;
constexpr double kCrUpper = 10.0;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const double kNuggetLadder[] = {0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4};

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

// A PLS-reduced kind falls back to the full kernel when the reduced level
// count would not actually reduce anything.
CategoricalKernelKind effective_kind(CategoricalKernelKind kind, int levels, int pls_levels) {
  if (kind == CategoricalKernelKind::kHhPls && pls_levels >= levels) {
    return CategoricalKernelKind::kHh;
  }
  if (kind == CategoricalKernelKind::kEhhPls && pls_levels >= levels) {
    return CategoricalKernelKind::kEhh;
  }
  return kind;
}

int kind_parameter_count(CategoricalKernelKind kind, int levels, int pls_levels) {
  switch (effective_kind(kind, levels, pls_levels)) {
    case CategoricalKernelKind::kGd:
      return 1;
    case CategoricalKernelKind::kCr:
      return levels;
    case CategoricalKernelKind::kEhh:
    case CategoricalKernelKind::kHh:
      return levels * (levels - 1) / 2;
    case CategoricalKernelKind::kHhPls:
    case CategoricalKernelKind::kEhhPls:
      return pls_levels * (pls_levels - 1) / 2;
  }
  return 0;
}

void validate_config(const DesignSpace& space, const KernelConfig& config) {
  if (config.cr_pls) {
    if (!config.categorical_kinds.empty()) {
      throw std::invalid_argument(
          "cr_pls replaces the whole kernel; categorical_kinds must be empty");
    }
  } else if (config.categorical_kinds.size() != space.num_categorical()) {
    throw std::invalid_argument("config needs one categorical kind per categorical variable");
  }
  if (config.pls_level_count < 2) {
    throw std::invalid_argument("pls_level_count must be >= 2");
  }
  if (config.continuous_pls && *config.continuous_pls < 1) {
    throw std::invalid_argument("continuous_pls component count must be >= 1");
  }
  if (!(config.epsilon > 0.0 && config.epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
}

}  // namespace

std::string to_string(CategoricalKernelKind kind) {
  switch (kind) {
    case CategoricalKernelKind::kGd: return "gd";
    case CategoricalKernelKind::kCr: return "cr";
    case CategoricalKernelKind::kEhh: return "ehh";
    case CategoricalKernelKind::kHh: return "hh";
    case CategoricalKernelKind::kHhPls: return "hh-pls";
    case CategoricalKernelKind::kEhhPls: return "ehh-pls";
  }
  return "?";
}

std::string to_string(ContinuousKernelType kind) {
  return kind == ContinuousKernelType::kSquaredExponential ? "squared_exponential"
                                                           : "absolute_exponential";
}

KernelConfig kernel_config_from_name(const DesignSpace& space, const std::string& name,
                                     int pls_levels, std::optional<int> continuous_components) {
  KernelConfig config;
  config.pls_level_count = pls_levels;
  config.continuous_pls = continuous_components;
  const auto all = [&](CategoricalKernelKind kind) {
    config.categorical_kinds.assign(space.num_categorical(), kind);
  };
  if (name == "gd") {
    all(CategoricalKernelKind::kGd);
  } else if (name == "cr") {
    all(CategoricalKernelKind::kCr);
  } else if (name == "ehh") {
    all(CategoricalKernelKind::kEhh);
  } else if (name == "hh") {
    all(CategoricalKernelKind::kHh);
  } else if (name == "hh-pls") {
    all(CategoricalKernelKind::kHhPls);
  } else if (name == "ehh-pls") {
    all(CategoricalKernelKind::kEhhPls);
  } else if (name == "cr-pls") {
    config.cr_pls = true;
  } else {
    throw std::invalid_argument("unknown kernel name '" + name + "'");
  }
  return config;
}

int hyperparameter_count(const DesignSpace& space, const KernelConfig& config) {
  validate_config(space, config);
  if (config.cr_pls) return config.continuous_pls.value_or(2);
  int count = config.continuous_pls ? *config.continuous_pls
                                    : static_cast<int>(space.num_continuous() + space.num_integer());
  for (std::size_t i = 0; i < space.num_categorical(); ++i) {
    count += kind_parameter_count(config.categorical_kinds[i],
                                  static_cast<int>(space.level_count(i)), config.pls_level_count);
  }
  return count;
}

SpdFactorization ensure_spd(const Eigen::MatrixXd& R) {
  if (R.rows() != R.cols()) throw std::invalid_argument("ensure_spd: matrix must be square");
  // A rung succeeds only when the smallest pivot is numerically trustworthy;
  // pivots at round-off scale factorize "successfully" but give meaningless
  // determinants and solves. The factor keeps the accepted condition number
  // below ~1/(512 eps) so one or two refinement passes recover full accuracy.
  const double pivot_floor = 512.0 * static_cast<double>(R.rows()) *
                             std::numeric_limits<double>::epsilon() *
                             std::max(1.0, R.diagonal().maxCoeff());
  for (double nugget : kNuggetLadder) {
    Eigen::MatrixXd work = R;
    if (nugget > 0.0) work.diagonal().array() += nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      const double min_pivot = lower.diagonal().minCoeff();
      if (min_pivot * min_pivot >= pivot_floor) {
        return SpdFactorization{std::move(lower), nugget};
      }
    }
  }
  // Diagnostic pass at the last rung to name the offending pivot.
  const double last = kNuggetLadder[std::size(kNuggetLadder) - 1];
  Eigen::MatrixXd work = R;
  work.diagonal().array() += last;
  const auto n = work.rows();
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    double pivot = work(k, k);
    for (Eigen::Index j = 0; j < k; ++j) pivot -= work(k, j) * work(k, j);
    smallest = std::min(smallest, pivot);
    if (pivot <= 0.0) break;
    work(k, k) = std::sqrt(pivot);
    for (Eigen::Index i = k + 1; i < n; ++i) {
      double v = work(i, k);
      for (Eigen::Index j = 0; j < k; ++j) v -= work(i, j) * work(k, j);
      work(i, k) = v / work(k, k);
    }
  }
  throw NonSpdError("correlation matrix not SPD after the nugget ladder (smallest pivot " +
                        std::to_string(smallest) + ")",
                    smallest);
}

namespace detail {

struct LikelihoodEval {
  double log_likelihood = kNegInf;
  double mu_std = 0.0;
  double sigma2_std = 0.0;
  Eigen::MatrixXd chol_lower;
  double nugget = 0.0;
};

class KernelModel {
 public:
  KernelModel(const DesignSpace& space, const KernelConfig& config, const Doe* doe)
      : space_(space), config_(config) {
    validate_config(space_, config_);
    n_cont_ = space_.num_continuous() + space_.num_integer();

    scale_lo_.resize(n_cont_);
    scale_span_.resize(n_cont_);
    for (std::size_t i = 0; i < space_.num_continuous(); ++i) {
      const auto& b = space_.continuous_variable(i).as_continuous();
      scale_lo_[i] = b.lower;
      scale_span_[i] = b.upper - b.lower;
    }
    for (std::size_t i = 0; i < space_.num_integer(); ++i) {
      const auto& b = space_.integer_variable(i).as_integer();
      scale_lo_[space_.num_continuous() + i] = static_cast<double>(b.lower);
      scale_span_[space_.num_continuous() + i] = static_cast<double>(b.upper - b.lower);
    }

    // Effective kinds and hyperparameter layout.
    if (!config_.cr_pls) {
      for (std::size_t i = 0; i < space_.num_categorical(); ++i) {
        eff_kinds_.push_back(effective_kind(config_.categorical_kinds[i],
                                            static_cast<int>(space_.level_count(i)),
                                            config_.pls_level_count));
      }
    }
    build_bounds();

    if (doe != nullptr) attach(*doe);
    if (needs_projections() && !has_responses()) {
      throw std::invalid_argument("this kernel config derives PLS projections from the data; "
                                  "a DoE with responses is required");
    }
  }

  const DesignSpace& space() const { return space_; }
  const KernelConfig& config() const { return config_; }
  const Doe& doe() const { return doe_; }
  bool has_doe() const { return n_t_ > 0; }
  bool has_responses() const { return y_std_.size() > 0 || constant_y_; }
  std::size_t sample_count() const { return n_t_; }
  bool constant_response() const { return constant_y_; }
  double response_mean() const { return y_mean_; }
  double response_sd() const { return y_sd_; }
  const Eigen::VectorXd& standardized_responses() const { return y_std_; }

  int hyperparameter_count() const { return static_cast<int>(bounds_.size()); }
  const std::vector<HyperparameterBound>& bounds() const { return bounds_; }

  struct Expansion {
    Eigen::VectorXd theta_cont;               // one entry per continuous/integer dim
    std::vector<Eigen::MatrixXd> level_mats;  // one per categorical variable
  };

  Expansion expand(const Eigen::VectorXd& theta) const {
    if (theta.size() != hyperparameter_count()) {
      throw std::invalid_argument("hyperparameter vector has wrong length");
    }
    Expansion e;
    if (config_.cr_pls) {
      if (!relaxed_pls_) throw std::invalid_argument("cr_pls kernel requires DoE responses");
      // The PLS runs on variance-standardized relaxed columns; folding the
      // column variances back in expresses the collapsed hyperparameters in
      // the plain [0,1]-scaled units the rest of the kernel uses. The floors
      // keep every pair correlation at or below the 0.999999 ceiling, away
      // from the singular attractor of the concentrated likelihood.
      Eigen::VectorXd relaxed =
          collapse_continuous_theta(*relaxed_pls_, theta).cwiseProduct(relaxed_inv_var_);
      e.theta_cont = relaxed.head(n_cont_).cwiseMax(kThetaLower);
      std::size_t offset = n_cont_;
      for (std::size_t i = 0; i < space_.num_categorical(); ++i) {
        const int levels = static_cast<int>(space_.level_count(i));
        CrParam cr;
        cr.diag.resize(levels);
        for (int l = 0; l < levels; ++l) cr.diag[l] = std::max(relaxed[offset + l], kCrLower);
        e.level_mats.push_back(build_level_matrix(cr));
        offset += levels;
      }
      return e;
    }

    int pos = 0;
    if (config_.continuous_pls) {
      const int d = *config_.continuous_pls;
      Eigen::VectorXd theta_hat = theta.segment(pos, d);
      pos += d;
      if (!cont_pls_) throw std::invalid_argument("continuous KPLS requires DoE responses");
      e.theta_cont = collapse_continuous_theta(*cont_pls_, theta_hat)
                         .cwiseProduct(cont_inv_var_)
                         .cwiseMax(kThetaLower);
    } else {
      e.theta_cont = theta.segment(pos, n_cont_);
      pos += static_cast<int>(n_cont_);
      if ((e.theta_cont.array() < 0.0).any()) {
        throw std::invalid_argument("continuous hyperparameters must be nonnegative");
      }
    }

    for (std::size_t i = 0; i < space_.num_categorical(); ++i) {
      const int levels = static_cast<int>(space_.level_count(i));
      const int block = kind_parameter_count(eff_kinds_[i], levels, config_.pls_level_count);
      CategoricalKernelParam param = make_param(i, theta.segment(pos, block));
      pos += block;
      e.level_mats.push_back(build_level_matrix(param));
    }
    return e;
  }

  CategoricalKernelParam make_param(std::size_t cat_index, const Eigen::VectorXd& block) const {
    const int levels = static_cast<int>(space_.level_count(cat_index));
    switch (eff_kinds_[cat_index]) {
      case CategoricalKernelKind::kGd:
        return GdParam{block[0], levels};
      case CategoricalKernelKind::kCr: {
        CrParam cr;
        cr.diag.assign(block.data(), block.data() + levels);
        return cr;
      }
      case CategoricalKernelKind::kEhh:
        return EhhParam{angles_from(block, levels), config_.epsilon};
      case CategoricalKernelKind::kHh:
        return HhParam{angles_from(block, levels)};
      case CategoricalKernelKind::kHhPls:
        return HhPlsParam{angles_from(block, config_.pls_level_count), rotation(cat_index)};
      case CategoricalKernelKind::kEhhPls:
        return EhhPlsParam{angles_from(block, config_.pls_level_count), rotation(cat_index),
                           config_.epsilon};
    }
    throw std::logic_error("unreachable kernel kind");
  }

  Eigen::VectorXd scale_point(const MixedPoint& w) const {
    Eigen::VectorXd out(n_cont_);
    for (std::size_t i = 0; i < space_.num_continuous(); ++i) {
      out[i] = (w.x[i] - scale_lo_[i]) / scale_span_[i];
    }
    for (std::size_t i = 0; i < space_.num_integer(); ++i) {
      const std::size_t j = space_.num_continuous() + i;
      out[j] = (static_cast<double>(w.z[i]) - scale_lo_[j]) / scale_span_[j];
    }
    return out;
  }

  double continuous_factor(const Expansion& e, const Eigen::VectorXd& a,
                           const Eigen::VectorXd& b) const {
    double sum = 0.0;
    if (config_.continuous_kernel == ContinuousKernelType::kSquaredExponential) {
      for (std::size_t j = 0; j < n_cont_; ++j) {
        const double d = a[j] - b[j];
        sum += e.theta_cont[j] * d * d;
      }
    } else {
      for (std::size_t j = 0; j < n_cont_; ++j) {
        sum += e.theta_cont[j] * std::abs(a[j] - b[j]);
      }
    }
    return std::exp(-sum);
  }

  double corr_between(const Expansion& e, std::size_t r, std::size_t s) const {
    double sum = 0.0;
    if (config_.continuous_kernel == ContinuousKernelType::kSquaredExponential) {
      for (std::size_t j = 0; j < n_cont_; ++j) {
        const double d = xs_(r, j) - xs_(s, j);
        sum += e.theta_cont[j] * d * d;
      }
    } else {
      for (std::size_t j = 0; j < n_cont_; ++j) {
        sum += e.theta_cont[j] * std::abs(xs_(r, j) - xs_(s, j));
      }
    }
    double value = std::exp(-sum);
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      value *= e.level_mats[i](levels_[i][r] - 1, levels_[i][s] - 1);
    }
    return value;
  }

  double corr_to(const Expansion& e, const Eigen::VectorXd& w_scaled,
                 const std::vector<int>& w_levels, std::size_t r) const {
    double sum = 0.0;
    if (config_.continuous_kernel == ContinuousKernelType::kSquaredExponential) {
      for (std::size_t j = 0; j < n_cont_; ++j) {
        const double d = w_scaled[j] - xs_(r, j);
        sum += e.theta_cont[j] * d * d;
      }
    } else {
      for (std::size_t j = 0; j < n_cont_; ++j) {
        sum += e.theta_cont[j] * std::abs(w_scaled[j] - xs_(r, j));
      }
    }
    double value = std::exp(-sum);
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      value *= e.level_mats[i](w_levels[i] - 1, levels_[i][r] - 1);
    }
    return value;
  }

  Eigen::MatrixXd correlation_matrix(const Expansion& e) const {
    if (!has_doe()) throw std::invalid_argument("correlation_matrix requires a DoE");
    Eigen::MatrixXd R = Eigen::MatrixXd::Identity(n_t_, n_t_);
    for (std::size_t r = 0; r < n_t_; ++r) {
      for (std::size_t s = r + 1; s < n_t_; ++s) {
        const double v = corr_between(e, r, s);
        R(r, s) = v;
        R(s, r) = v;
      }
    }
    return R;
  }

  // Concentrated log-likelihood of the standardized responses. Returns a
  // -inf sentinel when the profiled variance degenerates.
  LikelihoodEval likelihood(const Eigen::VectorXd& theta) const {
    if (!has_responses()) throw std::invalid_argument("log_likelihood requires responses");
    LikelihoodEval out;
    if (constant_y_) return out;

    const Expansion e = expand(theta);
    SpdFactorization fact = ensure_spd(correlation_matrix(e));
    out.nugget = fact.nugget;

    const auto n = static_cast<Eigen::Index>(n_t_);
    const auto lower = fact.lower.triangularView<Eigen::Lower>();
    const Eigen::VectorXd wy = lower.solve(y_std_);
    const Eigen::VectorXd wo = lower.solve(Eigen::VectorXd::Ones(n));
    const double ono = wo.squaredNorm();
    out.mu_std = wo.dot(wy) / ono;
    const double sigma2 = (wy - out.mu_std * wo).squaredNorm() / static_cast<double>(n);
    out.sigma2_std = sigma2;
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
      out.log_likelihood = kNegInf;
      return out;
    }
    const double logdet = 2.0 * fact.lower.diagonal().array().log().sum();
    out.log_likelihood = -0.5 * (static_cast<double>(n) * std::log(sigma2) + logdet +
                                 static_cast<double>(n) * (1.0 + std::log(2.0 * M_PI)));
    out.chol_lower = std::move(fact.lower);
    return out;
  }

  const Eigen::MatrixXd& scaled_inputs() const { return xs_; }
  const std::vector<std::vector<int>>& level_columns() const { return levels_; }

 private:
  bool needs_projections() const {
    if (config_.cr_pls || config_.continuous_pls) return true;
    for (auto kind : eff_kinds_) {
      if (kind == CategoricalKernelKind::kHhPls || kind == CategoricalKernelKind::kEhhPls) {
        return true;
      }
    }
    return false;
  }

  static HypersphereAngles angles_from(const Eigen::VectorXd& block, int levels) {
    HypersphereAngles a;
    a.level_count = levels;
    a.angles.assign(block.data(), block.data() + block.size());
    return a;
  }

  const MatrixPlsRotation& rotation(std::size_t cat_index) const {
    if (!cat_rot_[cat_index]) {
      throw std::invalid_argument("PLS kernel requires DoE responses");
    }
    return *cat_rot_[cat_index];
  }

  void build_bounds() {
    const HyperparameterBound theta_bound{kThetaLower, kThetaUpper, true};
    const HyperparameterBound cr_bound{kCrLower, kCrUpper, true};
    const HyperparameterBound angle_bound{0.0, M_PI, false};

    if (config_.cr_pls) {
      bounds_.assign(config_.continuous_pls.value_or(2), theta_bound);
      return;
    }
    bounds_.assign(config_.continuous_pls ? *config_.continuous_pls : n_cont_, theta_bound);
    for (std::size_t i = 0; i < space_.num_categorical(); ++i) {
      const int levels = static_cast<int>(space_.level_count(i));
      switch (eff_kinds_[i]) {
        case CategoricalKernelKind::kGd:
          bounds_.push_back(theta_bound);
          break;
        case CategoricalKernelKind::kCr:
          bounds_.insert(bounds_.end(), levels, cr_bound);
          break;
        case CategoricalKernelKind::kEhh:
        case CategoricalKernelKind::kHh:
          bounds_.insert(bounds_.end(), levels * (levels - 1) / 2, angle_bound);
          break;
        case CategoricalKernelKind::kHhPls:
        case CategoricalKernelKind::kEhhPls:
          bounds_.insert(bounds_.end(),
                         config_.pls_level_count * (config_.pls_level_count - 1) / 2,
                         angle_bound);
          break;
      }
    }
  }

  void attach(const Doe& doe) {
    if (doe.points.empty()) throw std::invalid_argument("DoE must contain at least one point");
    if (doe.has_responses() && doe.y.size() != doe.points.size()) {
      throw std::invalid_argument("DoE responses do not match the number of points");
    }
    for (const MixedPoint& w : doe.points) validate_point(space_, w);

    doe_ = doe;
    n_t_ = doe.points.size();
    xs_.resize(n_t_, n_cont_);
    for (std::size_t r = 0; r < n_t_; ++r) xs_.row(r) = scale_point(doe.points[r]).transpose();
    levels_.assign(space_.num_categorical(), std::vector<int>(n_t_));
    for (std::size_t i = 0; i < space_.num_categorical(); ++i) {
      for (std::size_t r = 0; r < n_t_; ++r) levels_[i][r] = doe.points[r].c[i];
    }

    if (!doe.has_responses()) return;

    Eigen::Map<const Eigen::VectorXd> y(doe.y.data(), static_cast<Eigen::Index>(doe.y.size()));
    y_mean_ = y.mean();
    const double var = (y.array() - y_mean_).square().mean();
    y_sd_ = std::sqrt(var);
    if (y_sd_ <= 1e-15 * std::max(1.0, std::abs(y_mean_))) {
      constant_y_ = true;
      y_sd_ = 0.0;
      return;
    }
    y_std_ = (y.array() - y_mean_) / y_sd_;

    // PLS regressions run on variance-standardized columns (zero-variance
    // columns are left untouched); the reciprocal variances fold the
    // collapsed hyperparameters back into [0,1]-scaled units.
    const auto standardize_columns = [](Eigen::MatrixXd& m, Eigen::VectorXd& inv_var) {
      inv_var = Eigen::VectorXd::Ones(m.cols());
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double mean = m.col(j).mean();
        const double var = (m.col(j).array() - mean).square().mean();
        if (var > 1e-24) {
          m.col(j) /= std::sqrt(var);
          inv_var[j] = 1.0 / var;
        }
      }
    };

    if (config_.cr_pls) {
      const int d = config_.continuous_pls.value_or(2);
      Eigen::MatrixXd relaxed(n_t_, space_.relaxed_dimension());
      for (std::size_t r = 0; r < n_t_; ++r) {
        relaxed.row(r).head(n_cont_) = xs_.row(r);
        std::size_t offset = n_cont_;
        for (std::size_t i = 0; i < space_.num_categorical(); ++i) {
          const std::size_t levels = space_.level_count(i);
          relaxed.row(r).segment(offset, levels).setZero();
          relaxed(r, offset + levels_[i][r] - 1) = 1.0;
          offset += levels;
        }
      }
      standardize_columns(relaxed, relaxed_inv_var_);
      relaxed_pls_ = pls_fit(relaxed, y_std_, d);
      return;
    }

    if (config_.continuous_pls) {
      if (n_cont_ == 0) {
        throw std::invalid_argument("continuous_pls needs continuous or integer variables");
      }
      Eigen::MatrixXd xs = xs_;
      standardize_columns(xs, cont_inv_var_);
      cont_pls_ = pls_fit(xs, y_std_, *config_.continuous_pls);
    }
    cat_rot_.assign(space_.num_categorical(), std::nullopt);
    for (std::size_t i = 0; i < space_.num_categorical(); ++i) {
      if (eff_kinds_[i] != CategoricalKernelKind::kHhPls &&
          eff_kinds_[i] != CategoricalKernelKind::kEhhPls) {
        continue;
      }
      const int levels = static_cast<int>(space_.level_count(i));
      const int d_in = levels * (levels - 1) / 2;
      Eigen::MatrixXd zeta(n_t_, d_in);
      for (std::size_t r = 0; r < n_t_; ++r) {
        const std::vector<int> enc = zeta_encode(levels, levels_[i][r]);
        for (int j = 0; j < d_in; ++j) zeta(r, j) = enc[j];
      }
      cat_rot_[i] = matrix_pls_fit(zeta, y_std_, levels, config_.pls_level_count);
    }
  }

  DesignSpace space_;
  KernelConfig config_;
  std::size_t n_cont_ = 0;
  std::vector<double> scale_lo_;
  std::vector<double> scale_span_;
  std::vector<CategoricalKernelKind> eff_kinds_;
  std::vector<HyperparameterBound> bounds_;

  Doe doe_;
  std::size_t n_t_ = 0;
  Eigen::MatrixXd xs_;
  std::vector<std::vector<int>> levels_;
  Eigen::VectorXd y_std_;
  double y_mean_ = 0.0;
  double y_sd_ = 1.0;
  bool constant_y_ = false;

  std::optional<PlsProjection> cont_pls_;
  Eigen::VectorXd cont_inv_var_;
  std::vector<std::optional<MatrixPlsRotation>> cat_rot_;
  std::optional<PlsProjection> relaxed_pls_;
  Eigen::VectorXd relaxed_inv_var_;
};

struct GpInternals {
  KernelModel model;
  KernelModel::Expansion expansion;
  Eigen::VectorXd theta;
  Eigen::MatrixXd chol_lower;
  double nugget = 0.0;
  Eigen::VectorXd alpha;      // R^-1 (y_std - mu_std 1)
  Eigen::VectorXd rinv_ones;  // R^-1 1
  double ones_rinv_ones = 0.0;
  double mu_std = 0.0;
  double sigma2_std = 0.0;
  bool constant = false;

  static TrainedGp wrap(std::shared_ptr<const GpInternals> impl) {
    TrainedGp gp;
    gp.impl_ = std::move(impl);
    return gp;
  }
};

namespace {

std::shared_ptr<GpInternals> assemble_internals(KernelModel model, const Eigen::VectorXd& theta,
                                                std::optional<double> fixed_nugget) {
  auto internals = std::make_shared<GpInternals>(GpInternals{
      std::move(model), {}, theta, {}, 0.0, {}, {}, 0.0, 0.0, 0.0, false});
  KernelModel& km = internals->model;

  if (km.constant_response()) {
    internals->constant = true;
    return internals;
  }

  internals->expansion = km.expand(theta);
  Eigen::MatrixXd R = km.correlation_matrix(internals->expansion);
  if (fixed_nugget) {
    internals->nugget = *fixed_nugget;
    if (*fixed_nugget > 0.0) R.diagonal().array() += *fixed_nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("stored nugget no longer factorizes the correlation matrix");
    }
    internals->chol_lower = llt.matrixL();
  } else {
    SpdFactorization fact = ensure_spd(R);
    internals->nugget = fact.nugget;
    internals->chol_lower = std::move(fact.lower);
    if (fact.nugget > 0.0) R.diagonal().array() += fact.nugget;
  }

  const auto n = static_cast<Eigen::Index>(km.sample_count());
  const auto lower = internals->chol_lower.triangularView<Eigen::Lower>();
  const auto upper = internals->chol_lower.transpose().triangularView<Eigen::Upper>();

  // Iterative refinement keeps the solve residuals near machine precision
  // even when R is barely positive definite, which is what the
  // training-point interpolation identity depends on.
  const auto solve_refined = [&](const Eigen::VectorXd& b) {
    Eigen::VectorXd x = upper.solve(Eigen::VectorXd(lower.solve(b)));
    const double tol = 1e-14 * std::max(1.0, b.norm());
    for (int pass = 0; pass < 6; ++pass) {
      const Eigen::VectorXd residual = b - R * x;
      if (residual.norm() <= tol) break;
      x += upper.solve(Eigen::VectorXd(lower.solve(residual)));
    }
    return x;
  };

  const Eigen::VectorXd rinv_y = solve_refined(km.standardized_responses());
  internals->rinv_ones = solve_refined(Eigen::VectorXd::Ones(n));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  internals->ones_rinv_ones = ones.dot(internals->rinv_ones);
  internals->mu_std = ones.dot(rinv_y) / internals->ones_rinv_ones;
  const Eigen::VectorXd centered =
      km.standardized_responses() - internals->mu_std * ones;
  internals->alpha = rinv_y - internals->mu_std * internals->rinv_ones;
  internals->sigma2_std = centered.dot(internals->alpha) / static_cast<double>(n);
  if (internals->sigma2_std < 0.0) internals->sigma2_std = 0.0;
  return internals;
}

}  // namespace

}  // namespace detail

const DesignSpace& TrainedGp::space() const { return impl_->model.space(); }
const KernelConfig& TrainedGp::config() const { return impl_->model.config(); }
const Doe& TrainedGp::doe() const { return impl_->model.doe(); }
const Eigen::VectorXd& TrainedGp::theta() const { return impl_->theta; }
double TrainedGp::nugget() const { return impl_->nugget; }
bool TrainedGp::constant_model() const { return impl_->constant; }

double TrainedGp::mu_hat() const {
  const auto& m = impl_->model;
  if (impl_->constant) return m.response_mean();
  return m.response_mean() + m.response_sd() * impl_->mu_std;
}

double TrainedGp::sigma2_hat() const {
  const auto& m = impl_->model;
  if (impl_->constant) return 0.0;
  return m.response_sd() * m.response_sd() * impl_->sigma2_std;
}

double TrainedGp::predict_mean(const MixedPoint& w) const {
  const auto& m = impl_->model;
  validate_point(m.space(), w);
  if (impl_->constant) return m.response_mean();
  const Eigen::VectorXd ws = m.scale_point(w);
  const auto n = static_cast<Eigen::Index>(m.sample_count());
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r[i] = m.corr_to(impl_->expansion, ws, w.c, static_cast<std::size_t>(i));
  }
  const double mean_std = impl_->mu_std + r.dot(impl_->alpha);
  return m.response_mean() + m.response_sd() * mean_std;
}

double TrainedGp::predict_variance(const MixedPoint& w) const {
  const auto& m = impl_->model;
  validate_point(m.space(), w);
  if (impl_->constant) return 0.0;
  const Eigen::VectorXd ws = m.scale_point(w);
  const auto n = static_cast<Eigen::Index>(m.sample_count());
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r[i] = m.corr_to(impl_->expansion, ws, w.c, static_cast<std::size_t>(i));
  }
  const Eigen::VectorXd v = impl_->chol_lower.triangularView<Eigen::Lower>().solve(r);
  const double one_rinv_r = impl_->rinv_ones.dot(r);
  double var_std = impl_->sigma2_std *
                   (1.0 - v.squaredNorm() +
                    (1.0 - one_rinv_r) * (1.0 - one_rinv_r) / impl_->ones_rinv_ones);
  if (var_std < 0.0) var_std = 0.0;  // round-off clamp
  const double sd = m.response_sd();
  return sd * sd * var_std;
}

Eigen::MatrixXd TrainedGp::level_matrix(std::size_t cat_index) const {
  if (impl_->constant) throw NumericalError("constant model has no fitted level matrix");
  if (cat_index >= impl_->expansion.level_mats.size()) {
    throw std::invalid_argument("categorical variable index out of range");
  }
  return impl_->expansion.level_mats[cat_index];
}

FitResult fit(const DesignSpace& space, const Doe& doe, const KernelConfig& config,
              const FitOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!doe.has_responses()) throw std::invalid_argument("fit: DoE has no responses");
  if (doe.size() < 2) throw std::invalid_argument("fit: need at least 2 points");
  if (options.starts < 1) throw std::invalid_argument("fit: starts must be >= 1");

  detail::KernelModel model(space, config, &doe);
  FitReport report;
  report.hyperparameter_count = model.hyperparameter_count();

  if (model.constant_response()) {
    report.warnings.push_back("degenerate responses (zero variance): constant model");
    report.best_log_likelihood = kNegInf;
    auto internals = detail::assemble_internals(std::move(model), Eigen::VectorXd(), 0.0);
    const auto t1 = std::chrono::steady_clock::now();
    report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    return FitResult{detail::GpInternals::wrap(std::move(internals)), std::move(report)};
  }

  const int dim = model.hyperparameter_count();
  const auto& bounds = model.bounds();
  BoxBounds box;
  box.lower.resize(dim);
  box.upper.resize(dim);
  for (int j = 0; j < dim; ++j) {
    box.lower[j] = bounds[j].log_scale ? std::log(bounds[j].lower) : bounds[j].lower;
    box.upper[j] = bounds[j].log_scale ? std::log(bounds[j].upper) : bounds[j].upper;
  }
  const auto to_physical = [&bounds, dim](const Eigen::VectorXd& t) {
    Eigen::VectorXd theta(dim);
    for (int j = 0; j < dim; ++j) theta[j] = bounds[j].log_scale ? std::exp(t[j]) : t[j];
    return theta;
  };

  const auto objective = [&model, &to_physical](const Eigen::VectorXd& t) -> double {
    try {
      const double ll = model.likelihood(to_physical(t)).log_likelihood;
      return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const long max_evals =
      options.max_evals_per_start > 0 ? options.max_evals_per_start : 150L * dim;

  // Starts evenly placed along the diagonal of the bound box, with
  // seed-controlled jitter of 10% of each range.
  std::vector<Eigen::VectorXd> start_points;
  for (int s = 0; s < options.starts; ++s) {
    const double frac = (s + 0.5) / options.starts;
    Eigen::VectorXd t = box.lower + frac * (box.upper - box.lower);
    auto rng = seeded_rng(options.seed, static_cast<std::uint64_t>(s));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int j = 0; j < dim; ++j) {
      t[j] = std::clamp(t[j] + 0.1 * unit(rng) * (box.upper[j] - box.lower[j]), box.lower[j],
                        box.upper[j]);
    }
    start_points.push_back(std::move(t));
  }

  std::vector<SearchResult> results(start_points.size());
  const auto run_start = [&](std::size_t s) {
    results[s] = pattern_search_minimize(objective, start_points[s], box, max_evals,
                                         options.step_tol_rel);
  };
  if (options.parallel && start_points.size() > 1) {
    std::vector<std::future<void>> tasks;
    tasks.reserve(start_points.size());
    for (std::size_t s = 0; s < start_points.size(); ++s) {
      tasks.push_back(std::async(std::launch::async, run_start, s));
    }
    for (auto& task : tasks) task.get();
  } else {
    for (std::size_t s = 0; s < start_points.size(); ++s) run_start(s);
  }

  std::size_t best = 0;
  for (std::size_t s = 0; s < results.size(); ++s) {
    report.starts.push_back(StartResult{-results[s].value, results[s].evaluations});
    report.total_evaluations += results[s].evaluations;
    if (results[s].value < results[best].value) best = s;
  }
  if (!std::isfinite(results[best].value)) {
    throw NumericalError("fit: every start failed to produce a finite likelihood");
  }
  report.best_log_likelihood = -results[best].value;

  auto internals =
      detail::assemble_internals(std::move(model), to_physical(results[best].x), std::nullopt);
  const auto t1 = std::chrono::steady_clock::now();
  report.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
  return FitResult{detail::GpInternals::wrap(std::move(internals)), std::move(report)};
}

TrainedGp assemble_trained_gp(const DesignSpace& space, const KernelConfig& config, const Doe& doe,
                              const Eigen::VectorXd& theta, double nugget) {
  detail::KernelModel model(space, config, &doe);
  if (!model.has_responses()) throw std::invalid_argument("assemble_trained_gp: responses required");
  return detail::GpInternals::wrap(detail::assemble_internals(std::move(model), theta, nugget));
}

double kernel_eval(const DesignSpace& space, const KernelConfig& config,
                   const Eigen::VectorXd& theta, const MixedPoint& a, const MixedPoint& b,
                   const Doe* doe_for_pls) {
  validate_point(space, a);
  validate_point(space, b);
  detail::KernelModel model(space, config, doe_for_pls);
  const auto e = model.expand(theta);
  double value = model.continuous_factor(e, model.scale_point(a), model.scale_point(b));
  for (std::size_t i = 0; i < space.num_categorical(); ++i) {
    value *= e.level_mats[i](a.c[i] - 1, b.c[i] - 1);
  }
  return value;
}

Eigen::MatrixXd correlation_matrix(const DesignSpace& space, const KernelConfig& config,
                                   const Eigen::VectorXd& theta, const Doe& doe) {
  detail::KernelModel model(space, config, &doe);
  return model.correlation_matrix(model.expand(theta));
}

double log_likelihood(const DesignSpace& space, const KernelConfig& config,
                      const Eigen::VectorXd& theta, const Doe& doe) {
  detail::KernelModel model(space, config, &doe);
  return model.likelihood(theta).log_likelihood;
}

}  // namespace mixedgp
