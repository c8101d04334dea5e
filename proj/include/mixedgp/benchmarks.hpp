#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixedgp/bayesopt.hpp"
#include "mixedgp/design_space.hpp"
#include "mixedgp/gp.hpp"

namespace mixedgp {

/// Categorical cosine test function: x in [0, 1], level in 1..13.
double cosine_fn(double x, int level);

/// Piecewise toy function for the optimization study: x in [0, 1],
/// level label in 0..9 (one branch per level).
double toy_fn(double x, int level);

enum class SectionShape { kSquare, kCircle, kIBeam, kStar };
enum class SectionFill { kFull, kMedium, kHollow };

struct CrossSection {
  SectionShape shape;
  SectionFill fill;
  std::string label;
  double normalized_inertia = 0.0;  // I / S^2, dimensionless
};

using CrossSectionTable = std::array<CrossSection, 12>;

/// Default section table, shape-major (square, circle, I, star) with
/// full/medium/hollow per shape. Square/circle/star use a concentric
/// self-similar hole of linear ratio 0.5 (medium) and 0.8 (hollow); the
/// I-beam uses flange/web thickness fractions (0.32, 0.48), (0.20, 0.20)
/// and (0.10, 0.10) of the unit envelope.
CrossSectionTable default_cross_sections();

/// Tip deflection of the loaded cantilever: F L^3 / (3 E S^2 Itilde) with
/// F = 50 kN and E = 200 GPa.
double cantilever_deflection(double itilde, double length_m, double area_m2);

struct BenchmarkProblem {
  std::string name;
  DesignSpace space;
  std::function<double(const MixedPoint&)> objective;
  std::size_t validation_resolution = 0;  // points per continuous axis

  Doe validation_set() const;  // grid with responses evaluated
};

BenchmarkProblem cosine_problem();
BenchmarkProblem cantilever_problem(const CrossSectionTable& table = default_cross_sections());
BenchmarkProblem toy_problem();
BenchmarkProblem problem_by_name(const std::string& name);
std::vector<std::string> problem_names();

double rmse(std::span<const double> predictions, std::span<const double> truths);

/// Predictive variance adequacy: log of the mean squared standardized error.
double pva(std::span<const double> predictions, std::span<const double> variances,
           std::span<const double> truths);

struct ModelBenchmarkCell {
  std::string kernel;
  std::uint64_t seed = 0;
  int hyperparameters = 0;
  double rmse = 0.0;
  double pva = 0.0;
  double log_likelihood = 0.0;
  double fit_seconds = 0.0;
  std::string error;  // nonempty when the fit failed
  Eigen::MatrixXd level_matrix;  // first categorical variable, when present
};

struct ModelBenchmarkSummary {
  std::string kernel;
  int hyperparameters = 0;
  double median_rmse = 0.0;
  double median_pva = 0.0;
  int failures = 0;
};

struct ModelBenchmarkReport {
  std::vector<ModelBenchmarkCell> cells;
  std::vector<ModelBenchmarkSummary> summaries;
};

struct KernelSpec {
  std::string name;       // gd | cr | ehh | hh | hh-pls | ehh-pls | cr-pls
  int pls_levels = 2;
  std::optional<int> continuous_components;
  long max_evals_per_start = 0;  // 0: use the runner-wide fit options
};

/// Per seed: LHS DoE of doe_size, fit every kernel, score RMSE/PVA on the
/// problem's validation grid. Medians are taken over seeds.
ModelBenchmarkReport run_model_benchmark(const BenchmarkProblem& problem,
                                         const std::vector<KernelSpec>& kernels,
                                         std::size_t doe_size,
                                         const std::vector<std::uint64_t>& seeds,
                                         const FitOptions& fit_options = {});

struct OptimBenchmarkRun {
  std::string kernel;
  int doe_size = 0;
  int run = 0;
  std::vector<double> best_curve;  // best-so-far per evaluation
  bool failed = false;
  std::string error;
};

struct OptimBenchmarkSummary {
  std::string kernel;
  int doe_size = 0;
  int successful_runs = 0;
  int failures = 0;
  std::vector<double> median_curve;
  double median_best_at(std::size_t evaluations) const;
  double median_final() const;
};

struct OptimBenchmarkReport {
  std::vector<OptimBenchmarkRun> runs;
  std::vector<OptimBenchmarkSummary> summaries;
};

/// Per kernel x DoE size x run: one EGO trace; statistics are computed over
/// the successful runs only.
OptimBenchmarkReport run_optim_benchmark(const BenchmarkProblem& problem,
                                         const std::vector<KernelSpec>& kernels,
                                         const std::vector<int>& doe_sizes, int runs, int budget,
                                         const FitOptions& fit_options = {},
                                         std::uint64_t base_seed = 0);

void write_model_report_csv(const ModelBenchmarkReport& report, const std::string& path);
void write_model_report_json(const ModelBenchmarkReport& report, const std::string& path);
void write_optim_report_csv(const OptimBenchmarkReport& report, const std::string& path);
void write_optim_report_json(const OptimBenchmarkReport& report, const std::string& path);

}  // namespace mixedgp
