#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mixedgp/benchmarks.hpp"
#include "mixedgp/gp.hpp"
#include "mixedgp/io.hpp"
#include "mixedgp/pls.hpp"

using namespace mixedgp;

namespace {

DesignSpace mixed_space() {
  return DesignSpace({VariableSpec{"x", ContinuousVar{0.0, 2.0}},
                      VariableSpec{"c", CategoricalVar{{"a", "b", "c"}}}});
}

// Deterministic response with per-level offsets. The oscillation keeps the
// fitted length scales moderate, so the training correlation matrix stays
// comfortably positive definite.
double smooth_response(const MixedPoint& w) {
  const double x = w.x.empty() ? 0.0 : w.x[0];
  const double offset = w.c.empty() ? 0.0 : 0.7 * w.c[0];
  return std::sin(5.5 * x) + 0.25 * x * x + offset;
}

Doe sampled_doe(const DesignSpace& space, std::size_t n, std::uint64_t seed) {
  Doe doe = lhs_sample(space, n, seed);
  for (const MixedPoint& w : doe.points) doe.y.push_back(smooth_response(w));
  return doe;
}

FitOptions quick_fit() {
  FitOptions options;
  options.starts = 3;
  options.max_evals_per_start = 120;
  return options;
}

}  // namespace

TEST_CASE("hyperparameter counts per kernel family") {
  const BenchmarkProblem cosine = cosine_problem();
  CHECK(hyperparameter_count(cosine.space, kernel_config_from_name(cosine.space, "gd")) == 2);
  CHECK(hyperparameter_count(cosine.space, kernel_config_from_name(cosine.space, "cr")) == 14);
  CHECK(hyperparameter_count(cosine.space, kernel_config_from_name(cosine.space, "hh")) == 79);
  CHECK(hyperparameter_count(cosine.space, kernel_config_from_name(cosine.space, "ehh")) == 79);
  CHECK(hyperparameter_count(cosine.space, kernel_config_from_name(cosine.space, "hh-pls", 2)) ==
        2);
  CHECK(hyperparameter_count(cosine.space, kernel_config_from_name(cosine.space, "cr-pls")) == 2);

  const BenchmarkProblem toy = toy_problem();
  CHECK(hyperparameter_count(toy.space, kernel_config_from_name(toy.space, "gd")) == 2);
  CHECK(hyperparameter_count(toy.space, kernel_config_from_name(toy.space, "cr")) == 11);
  CHECK(hyperparameter_count(toy.space, kernel_config_from_name(toy.space, "hh")) == 46);
  CHECK(hyperparameter_count(toy.space, kernel_config_from_name(toy.space, "hh-pls", 2)) == 2);

  const BenchmarkProblem beam = cantilever_problem();
  CHECK(hyperparameter_count(beam.space, kernel_config_from_name(beam.space, "hh")) == 68);
  CHECK(hyperparameter_count(beam.space, kernel_config_from_name(beam.space, "hh-pls", 2)) == 3);
  CHECK(hyperparameter_count(beam.space, kernel_config_from_name(beam.space, "gd")) == 3);
}

TEST_CASE("kernel_eval product of closed forms") {
  const DesignSpace space({VariableSpec{"x", ContinuousVar{0.0, 1.0}},
                           VariableSpec{"c", CategoricalVar{{"a", "b"}}}});
  const KernelConfig config = kernel_config_from_name(space, "gd");
  Eigen::VectorXd theta(2);

  theta << 1.0, 2.0;  // theta_cont = 1, gd theta = 2
  const MixedPoint p0{{0.0}, {}, {1}};
  const MixedPoint p1{{1.0}, {}, {2}};
  CHECK(kernel_eval(space, config, theta, p0, p0) == doctest::Approx(1.0));
  CHECK(kernel_eval(space, config, theta, p0, p1) == doctest::Approx(std::exp(-3.0)));

  theta << 0.0, 0.0;
  CHECK(kernel_eval(space, config, theta, p0, p1) == doctest::Approx(1.0));
}

TEST_CASE("correlation_matrix basics") {
  const DesignSpace space({VariableSpec{"x", ContinuousVar{0.0, 1.0}}});
  const KernelConfig config = kernel_config_from_name(space, "gd");
  Eigen::VectorXd theta(1);
  theta << 1.0;

  Doe one;
  one.points.push_back(MixedPoint{{0.5}, {}, {}});
  CHECK(correlation_matrix(space, config, theta, one).isIdentity(1e-15));

  Doe three;
  three.points = {MixedPoint{{0.0}, {}, {}}, MixedPoint{{0.5}, {}, {}}, MixedPoint{{1.0}, {}, {}}};
  theta << 19.9;
  const Eigen::MatrixXd big_theta = correlation_matrix(space, config, theta, three);
  CHECK(big_theta(0, 2) < 3e-9);  // decay limit toward identity
  CHECK(big_theta(0, 0) == 1.0);
  CHECK(big_theta(0, 1) == doctest::Approx(big_theta(1, 0)));
}

TEST_CASE("log_likelihood profile and invariances") {
  const DesignSpace space({VariableSpec{"x", ContinuousVar{0.0, 1.0}}});
  const KernelConfig config = kernel_config_from_name(space, "gd");
  Eigen::VectorXd theta(1);
  theta << 5.0;

  Doe one;
  one.points.push_back(MixedPoint{{0.5}, {}, {}});
  one.y.push_back(3.0);
  CHECK(log_likelihood(space, config, theta, one) == -std::numeric_limits<double>::infinity());

  // Evenly spaced points and a fast-decaying correlation keep the matrix
  // well conditioned, so the permutation comparison is tight.
  theta << 20.0;
  Doe doe = validation_grid(space, 8);
  for (const MixedPoint& w : doe.points) doe.y.push_back(smooth_response(w));
  const double base = log_likelihood(space, config, theta, doe);
  CHECK(std::isfinite(base));

  // Permutation invariance.
  Doe permuted = doe;
  std::mt19937_64 rng(1);
  std::vector<std::size_t> order(doe.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < order.size(); ++i) {
    permuted.points[i] = doe.points[order[i]];
    permuted.y[i] = doe.y[order[i]];
  }
  CHECK(log_likelihood(space, config, theta, permuted) == doctest::Approx(base).epsilon(1e-9));

  // Constant shift moves mu_hat, not sigma2_hat (profiled constant mean).
  Doe shifted = doe;
  for (double& v : shifted.y) v += 100.0;
  const TrainedGp gp_base = assemble_trained_gp(space, config, doe, theta, 0.0);
  const TrainedGp gp_shift = assemble_trained_gp(space, config, shifted, theta, 0.0);
  CHECK(gp_shift.mu_hat() == doctest::Approx(gp_base.mu_hat() + 100.0).epsilon(1e-9));
  CHECK(gp_shift.sigma2_hat() == doctest::Approx(gp_base.sigma2_hat()).epsilon(1e-8));
}

TEST_CASE("sigma2_hat under an identity correlation equals the response variance") {
  // Cube corners keep every scaled pairwise squared distance >= 1, so at the
  // upper theta bound the correlations drop below 2.07e-9.
  const DesignSpace space({VariableSpec{"x1", ContinuousVar{0.0, 1.0}},
                           VariableSpec{"x2", ContinuousVar{0.0, 1.0}},
                           VariableSpec{"x3", ContinuousVar{0.0, 1.0}}});
  const KernelConfig config = kernel_config_from_name(space, "gd");
  Doe doe;
  doe.points = {MixedPoint{{0.0, 0.0, 0.0}, {}, {}}, MixedPoint{{1.0, 0.0, 0.0}, {}, {}},
                MixedPoint{{0.0, 1.0, 0.0}, {}, {}}, MixedPoint{{1.0, 1.0, 1.0}, {}, {}}};
  doe.y = {1.0, -2.0, 0.5, 3.0};
  Eigen::VectorXd theta(3);
  theta << 20.0, 20.0, 20.0;
  const TrainedGp gp = assemble_trained_gp(space, config, doe, theta, 0.0);

  double mean = 0.0;
  for (double v : doe.y) mean += v;
  mean /= doe.y.size();
  double var = 0.0;
  for (double v : doe.y) var += (v - mean) * (v - mean);
  var /= doe.y.size();
  CHECK(gp.sigma2_hat() == doctest::Approx(var).epsilon(1e-6));
  CHECK(gp.mu_hat() == doctest::Approx(mean).epsilon(1e-6));
}

TEST_CASE("ensure_spd nugget ladder") {
  CHECK(ensure_spd(Eigen::MatrixXd::Identity(4, 4)).nugget == 0.0);

  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);  // eigenvalues {2, 0}
  const SpdFactorization fact = ensure_spd(ones);
  CHECK(fact.nugget == 1e-12);

  // Slightly indefinite matrix from reconstruction round-off.
  Eigen::MatrixXd q(2, 2);
  const double c = std::cos(0.3), s = std::sin(0.3);
  q << c, -s, s, c;
  Eigen::MatrixXd nearly = q * Eigen::Vector2d(1.0, -1e-13).asDiagonal() * q.transpose();
  const SpdFactorization fixed = ensure_spd(nearly);
  CHECK(fixed.nugget == 1e-12);

  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 2.0, 2.0, 1.0;  // eigenvalue -1 beyond any ladder rung
  CHECK_THROWS_AS(ensure_spd(indefinite), NonSpdError);
  try {
    ensure_spd(indefinite);
  } catch (const NonSpdError& e) {
    CHECK(e.smallest_pivot() < 0.0);
  }
}

TEST_CASE("fit handles constant responses with a warning") {
  const DesignSpace space = mixed_space();
  Doe doe = lhs_sample(space, 6, 9);
  doe.y.assign(6, 4.25);
  const FitResult result = fit(space, doe, kernel_config_from_name(space, "gd"), quick_fit());
  CHECK(result.gp.constant_model());
  CHECK(result.gp.mu_hat() == doctest::Approx(4.25));
  CHECK(result.gp.sigma2_hat() == 0.0);
  CHECK(result.gp.predict_mean(doe.points[0]) == doctest::Approx(4.25));
  CHECK(result.gp.predict_variance(doe.points[0]) == 0.0);
  REQUIRE(!result.report.warnings.empty());
}

TEST_CASE("noiseless kriging interpolates the training data") {
  const DesignSpace space = mixed_space();
  const Doe doe = sampled_doe(space, 14, 21);
  double lo = doe.y[0], hi = doe.y[0];
  for (double v : doe.y) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;

  for (const std::string& kernel : {"gd", "cr", "ehh", "hh", "hh-pls", "ehh-pls", "cr-pls"}) {
    CAPTURE(kernel);
    const KernelConfig config = kernel_config_from_name(space, kernel);
    const FitResult result = fit(space, doe, config, quick_fit());
    for (std::size_t i = 0; i < doe.size(); ++i) {
      CHECK(std::abs(result.gp.predict_mean(doe.points[i]) - doe.y[i]) <= 1e-6 * range);
      CHECK(result.gp.predict_variance(doe.points[i]) <= 1e-6 * result.gp.sigma2_hat());
    }
  }
}

TEST_CASE("predictions revert to the prior far from the data") {
  const DesignSpace space({VariableSpec{"x", ContinuousVar{0.0, 1.0}}});
  const KernelConfig config = kernel_config_from_name(space, "gd");
  Doe doe;
  doe.points = {MixedPoint{{0.0}, {}, {}}, MixedPoint{{0.06}, {}, {}},
                MixedPoint{{0.12}, {}, {}}};
  doe.y = {1.0, 1.4, 0.9};
  Eigen::VectorXd theta(1);
  theta << 20.0;
  const TrainedGp gp = assemble_trained_gp(space, config, doe, theta, 0.0);

  const MixedPoint far{{1.0}, {}, {}};
  CHECK(gp.predict_mean(far) == doctest::Approx(gp.mu_hat()).epsilon(1e-4));

  // r -> 0 limit of the variance formula.
  Eigen::MatrixXd r_matrix = correlation_matrix(space, config, theta, doe);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(3);
  const double ones_rinv_ones = ones.dot(r_matrix.llt().solve(ones));
  CHECK(gp.predict_variance(far) ==
        doctest::Approx(gp.sigma2_hat() * (1.0 + 1.0 / ones_rinv_ones)).epsilon(1e-4));

  // Same limit collapses to 2 sigma2_hat when a single training point leaves
  // 1^T R^-1 1 = 1; with one observation the profiled variance is zero, and
  // the far-point variance degenerates with it.
  Doe single;
  single.points = {MixedPoint{{0.0}, {}, {}}};
  single.y = {2.0};
  const TrainedGp gp1 = assemble_trained_gp(space, config, single, theta, 0.0);
  CHECK(gp1.sigma2_hat() == 0.0);
  CHECK(gp1.predict_variance(far) == doctest::Approx(2.0 * gp1.sigma2_hat()));
}

TEST_CASE("prediction at the midpoint of symmetric data is the response mean") {
  const DesignSpace space({VariableSpec{"x", ContinuousVar{0.0, 1.0}}});
  Doe doe;
  doe.points = {MixedPoint{{0.3}, {}, {}}, MixedPoint{{0.7}, {}, {}}};
  doe.y = {2.0, 5.0};
  Eigen::VectorXd theta(1);
  theta << 3.0;
  const TrainedGp gp =
      assemble_trained_gp(space, kernel_config_from_name(space, "gd"), doe, theta, 0.0);
  CHECK(gp.predict_mean(MixedPoint{{0.5}, {}, {}}) == doctest::Approx(3.5).epsilon(1e-10));
}

TEST_CASE("fit on the cosine problem with the reduced kernel uses 2 hyperparameters") {
  const BenchmarkProblem problem = cosine_problem();
  Doe doe = lhs_sample(problem.space, 30, 5);
  for (const MixedPoint& w : doe.points) doe.y.push_back(problem.objective(w));
  const FitResult result =
      fit(problem.space, doe, kernel_config_from_name(problem.space, "hh-pls", 2), quick_fit());
  CHECK(result.report.hyperparameter_count == 2);
  CHECK(result.gp.theta().size() == 2);
  CHECK(std::isfinite(result.report.best_log_likelihood));
  for (const StartResult& start : result.report.starts) {
    CHECK(result.report.best_log_likelihood >= start.final_log_likelihood);
  }
  const Eigen::MatrixXd level_matrix = result.gp.level_matrix(0);
  CHECK(level_matrix.rows() == 13);
  CHECK(level_matrix.diagonal().isOnes(1e-15));
}

TEST_CASE("continuous KPLS collapse carries through the fitted kernel") {
  const DesignSpace space({VariableSpec{"x1", ContinuousVar{0.0, 1.0}},
                           VariableSpec{"x2", ContinuousVar{0.0, 1.0}},
                           VariableSpec{"x3", ContinuousVar{0.0, 1.0}}});
  Doe doe = lhs_sample(space, 20, 77);
  for (const MixedPoint& w : doe.points) {
    doe.y.push_back(std::sin(3.0 * w.x[0]) + 0.1 * w.x[1]);
  }
  KernelConfig config = kernel_config_from_name(space, "gd", 2, 1);
  CHECK(hyperparameter_count(space, config) == 1);
  const FitResult result = fit(space, doe, config, quick_fit());
  double lo = doe.y[0], hi = doe.y[0];
  for (double v : doe.y) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (std::size_t i = 0; i < doe.size(); ++i) {
    CHECK(std::abs(result.gp.predict_mean(doe.points[i]) - doe.y[i]) <= 1e-6 * (hi - lo));
  }
}

TEST_CASE("predict_variance is nonnegative and locally continuous") {
  const DesignSpace space = mixed_space();
  const Doe doe = sampled_doe(space, 12, 8);
  const TrainedGp gp = fit(space, doe, kernel_config_from_name(space, "hh"), quick_fit()).gp;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double x = 1e-4 + 1.999 * unit(rng);
    const int level = 1 + static_cast<int>(rng() % 3);
    const MixedPoint w{{x}, {}, {level}};
    const MixedPoint w_eps{{x + 1e-7}, {}, {level}};
    const double v = gp.predict_variance(w);
    CHECK(v >= 0.0);
    CHECK(std::abs(gp.predict_variance(w_eps) - v) < 1e-4 * (gp.sigma2_hat() + 1e-12));
  }
}

TEST_CASE("cr-pls kernel equals the product-form projected kernel") {
  const DesignSpace space = mixed_space();
  const Doe doe = sampled_doe(space, 16, 13);
  const KernelConfig config = kernel_config_from_name(space, "cr-pls");

  // Interior hyperparameters keep the collapse away from the bound floors,
  // where the two routes coincide exactly.
  Eigen::VectorXd theta_hat(2);
  theta_hat << 1.3, 2.4;

  // Test-side route: standardized relaxed data -> PLS -> product over
  // components of per-dimension squared-exponential factors.
  Eigen::MatrixXd relaxed(doe.size(), space.relaxed_dimension());
  for (std::size_t r = 0; r < doe.size(); ++r) {
    const auto row = one_hot_relax(space, doe.points[r]);
    for (std::size_t j = 0; j < row.size(); ++j) relaxed(r, j) = row[j];
  }
  relaxed.col(0) = (relaxed.col(0).array() - 0.0) / 2.0;  // x scaled to [0, 1]
  Eigen::VectorXd col_sd(relaxed.cols());
  for (Eigen::Index j = 0; j < relaxed.cols(); ++j) {
    const double mean = relaxed.col(j).mean();
    col_sd[j] = std::sqrt((relaxed.col(j).array() - mean).square().mean());
    relaxed.col(j) /= col_sd[j];
  }
  Eigen::Map<const Eigen::VectorXd> y(doe.y.data(), static_cast<Eigen::Index>(doe.y.size()));
  const Eigen::VectorXd y_std = (y.array() - y.mean()) / std::sqrt((y.array() - y.mean()).square().mean());
  const PlsProjection proj = pls_fit(relaxed, y_std, 2);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const MixedPoint a{{2.0 * unit(rng)}, {}, {1 + static_cast<int>(rng() % 3)}};
    const MixedPoint b{{2.0 * unit(rng)}, {}, {1 + static_cast<int>(rng() % 3)}};
    const auto standardized = [&](const MixedPoint& w) {
      auto row = one_hot_relax(space, w);
      Eigen::VectorXd v(row.size());
      for (std::size_t j = 0; j < row.size(); ++j) v[j] = row[j];
      v[0] /= 2.0;
      return Eigen::VectorXd(v.cwiseQuotient(col_sd));
    };
    const Eigen::VectorXd va = standardized(a);
    const Eigen::VectorXd vb = standardized(b);
    double product = 1.0;
    for (int t = 0; t < 2; ++t) {
      for (Eigen::Index j = 0; j < va.size(); ++j) {
        const double diff = proj.rotation(j, t) * (va[j] - vb[j]);
        product *= std::exp(-theta_hat[t] * diff * diff);
      }
    }
    CHECK(kernel_eval(space, config, theta_hat, a, b, &doe) ==
          doctest::Approx(product).epsilon(1e-10));
  }
}

TEST_CASE("fit is deterministic given the seed") {
  const DesignSpace space = mixed_space();
  const Doe doe = sampled_doe(space, 10, 17);
  FitOptions options = quick_fit();
  options.seed = 99;
  const FitResult a = fit(space, doe, kernel_config_from_name(space, "cr"), options);
  const FitResult b = fit(space, doe, kernel_config_from_name(space, "cr"), options);
  CHECK(a.gp.theta() == b.gp.theta());
  CHECK(a.report.best_log_likelihood == b.report.best_log_likelihood);
}

TEST_CASE("model serialization round-trips predictions") {
  const DesignSpace space = mixed_space();
  const Doe doe = sampled_doe(space, 12, 3);
  const FitResult result =
      fit(space, doe, kernel_config_from_name(space, "hh-pls", 2), quick_fit());

  const std::string path = "/tmp/mixedgp_test_model.json";
  save_model(result.gp, path);
  const TrainedGp loaded = load_model(path);

  const Doe probes = lhs_sample(space, 25, 99);
  for (const MixedPoint& w : probes.points) {
    CHECK(std::abs(loaded.predict_mean(w) - result.gp.predict_mean(w)) < 1e-10);
    CHECK(std::abs(loaded.predict_variance(w) - result.gp.predict_variance(w)) < 1e-10);
  }
  CHECK(loaded.nugget() == result.gp.nugget());
  CHECK(loaded.mu_hat() == doctest::Approx(result.gp.mu_hat()).epsilon(1e-12));
}

TEST_CASE("fit input validation") {
  const DesignSpace space = mixed_space();
  Doe empty;
  CHECK_THROWS_AS(fit(space, empty, kernel_config_from_name(space, "gd")),
                  std::invalid_argument);
  Doe no_y = lhs_sample(space, 5, 1);
  CHECK_THROWS_AS(fit(space, no_y, kernel_config_from_name(space, "gd")), std::invalid_argument);

  KernelConfig bad;
  bad.categorical_kinds = {};  // wrong arity for this space
  CHECK_THROWS_AS(hyperparameter_count(space, bad), std::invalid_argument);
}
