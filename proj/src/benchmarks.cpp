#include "mixedgp/benchmarks.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace mixedgp {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Second moment of area about the x axis and area of a simple polygon
// (counterclockwise, centroid assumed on the axis).
struct PolygonMoments {
  double area = 0.0;
  double ix = 0.0;
};

PolygonMoments polygon_moments(const std::vector<std::pair<double, double>>& vertices) {
  PolygonMoments m;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [x0, y0] = vertices[i];
    const auto& [x1, y1] = vertices[(i + 1) % n];
    const double cross = x0 * y1 - x1 * y0;
    m.area += 0.5 * cross;
    m.ix += cross * (y0 * y0 + y0 * y1 + y1 * y1) / 12.0;
  }
  return m;
}

// Normalized moment I / S^2 of a 6-pointed star (inner/outer radius 0.5).
double star_full_inertia() {
  std::vector<std::pair<double, double>> vertices;
  for (int k = 0; k < 12; ++k) {
    const double radius = (k % 2 == 0) ? 1.0 : 0.5;
    const double angle = kPi * k / 6.0;
    vertices.emplace_back(radius * std::cos(angle), radius * std::sin(angle));
  }
  const PolygonMoments m = polygon_moments(vertices);
  return m.ix / (m.area * m.area);
}

// Concentric self-similar hole of linear ratio r scales I/S^2 by
// (1 + r^2) / (1 - r^2).
double hole_factor(double r) { return (1.0 + r * r) / (1.0 - r * r); }

double square_inertia(double hole_ratio) { return hole_factor(hole_ratio) / 12.0; }

double circle_inertia(double hole_ratio) { return hole_factor(hole_ratio) / (4.0 * kPi); }

// Unit-envelope I-section with flange thickness tf and web thickness tw.
double ibeam_inertia(double tf, double tw) {
  const double area = 2.0 * tf + (1.0 - 2.0 * tf) * tw;
  const double h = 1.0 - 2.0 * tf;
  const double ix = (1.0 - (1.0 - tw) * h * h * h) / 12.0;
  return ix / (area * area);
}

std::string fill_name(SectionFill fill) {
  switch (fill) {
    case SectionFill::kFull: return "full";
    case SectionFill::kMedium: return "medium";
    case SectionFill::kHollow: return "hollow";
  }
  return "?";
}

std::string shape_name(SectionShape shape) {
  switch (shape) {
    case SectionShape::kSquare: return "square";
    case SectionShape::kCircle: return "circle";
    case SectionShape::kIBeam: return "ibeam";
    case SectionShape::kStar: return "star";
  }
  return "?";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  out << text;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

double cosine_fn(double x, int level) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("cosine_fn: x outside [0, 1]");
  if (level < 1 || level > 13) throw std::invalid_argument("cosine_fn: level outside 1..13");
  const double base = 3.5 * kPi * x;
  if (level <= 9) {
    return std::cos(base + (0.4 * kPi + kPi / 15.0 * level) - level / 20.0);
  }
  return std::cos(base - level / 20.0);
}

double toy_fn(double x, int level) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("toy_fn: x outside [0, 1]");
  switch (level) {
    case 0: return std::cos(3.6 * kPi * (x - 2.0)) + x - 1.0;
    case 1: return 2.0 * std::cos(1.1 * kPi * std::exp(x)) - 0.5 * x + 2.0;
    case 2: return std::cos(2.0 * kPi * x) + 0.5 * x;
    case 3: return x * (std::cos(3.4 * kPi * (x - 1.0)) - 0.5 * (x - 1.0));
    case 4: return -0.5 * x * x;
    case 5: {
      const double c = std::cos(0.25 * kPi * std::exp(-std::pow(x, 4)));
      return 2.0 * c * c - 0.5 * x + 1.0;
    }
    case 6: return x * std::cos(3.4 * kPi * x) - 0.5 * x + 1.0;
    case 7: return -x * (std::cos(3.5 * kPi * x) + 0.5 * x) + 2.0;
    case 8: return -0.5 * std::pow(x, 5) + 1.0;
    case 9: {
      const double c = std::cos(2.5 * kPi * x);
      return -c * c * std::sqrt(x) - 0.5 * std::log(x + 0.5) - 1.3;
    }
    default:
      throw std::invalid_argument("toy_fn: level outside 0..9");
  }
}

CrossSectionTable default_cross_sections() {
  const double star_base = star_full_inertia();
  const auto star_inertia = [&](double r) { return star_base * hole_factor(r); };

  CrossSectionTable table = {{
      {SectionShape::kSquare, SectionFill::kFull, "", square_inertia(0.0)},
      {SectionShape::kSquare, SectionFill::kMedium, "", square_inertia(0.5)},
      {SectionShape::kSquare, SectionFill::kHollow, "", square_inertia(0.8)},
      {SectionShape::kCircle, SectionFill::kFull, "", circle_inertia(0.0)},
      {SectionShape::kCircle, SectionFill::kMedium, "", circle_inertia(0.5)},
      {SectionShape::kCircle, SectionFill::kHollow, "", circle_inertia(0.8)},
      {SectionShape::kIBeam, SectionFill::kFull, "", ibeam_inertia(0.32, 0.48)},
      {SectionShape::kIBeam, SectionFill::kMedium, "", ibeam_inertia(0.20, 0.20)},
      {SectionShape::kIBeam, SectionFill::kHollow, "", ibeam_inertia(0.10, 0.10)},
      {SectionShape::kStar, SectionFill::kFull, "", star_inertia(0.0)},
      {SectionShape::kStar, SectionFill::kMedium, "", star_inertia(0.5)},
      {SectionShape::kStar, SectionFill::kHollow, "", star_inertia(0.8)},
  }};
  for (auto& section : table) {
    section.label = shape_name(section.shape) + "_" + fill_name(section.fill);
  }
  return table;
}

double cantilever_deflection(double itilde, double length_m, double area_m2) {
  if (!(itilde > 0.0)) throw std::invalid_argument("cantilever: Itilde must be positive");
  if (!(length_m > 0.0) || !(area_m2 > 0.0)) {
    throw std::invalid_argument("cantilever: length and area must be positive");
  }
  constexpr double kForce = 5e4;    // N
  constexpr double kYoung = 2e11;   // Pa
  return kForce / (3.0 * kYoung) * std::pow(length_m, 3) / (area_m2 * area_m2 * itilde);
}

Doe BenchmarkProblem::validation_set() const {
  Doe grid = validation_grid(space, validation_resolution);
  grid.y.reserve(grid.size());
  for (const MixedPoint& w : grid.points) grid.y.push_back(objective(w));
  return grid;
}

BenchmarkProblem cosine_problem() {
  std::vector<std::string> levels;
  for (int i = 1; i <= 13; ++i) levels.push_back(std::to_string(i));
  DesignSpace space({
      VariableSpec{"x", ContinuousVar{0.0, 1.0}},
      VariableSpec{"c", CategoricalVar{levels}},
  });
  return BenchmarkProblem{
      "cosine", space, [](const MixedPoint& w) { return cosine_fn(w.x[0], w.c[0]); }, 1000};
}

BenchmarkProblem cantilever_problem(const CrossSectionTable& table) {
  std::vector<std::string> labels;
  for (const auto& section : table) labels.push_back(section.label);
  DesignSpace space({
      VariableSpec{"section", CategoricalVar{labels}},
      VariableSpec{"L", ContinuousVar{10.0, 20.0}},
      VariableSpec{"S", ContinuousVar{1.0, 2.0}},
  });
  auto objective = [table](const MixedPoint& w) {
    return cantilever_deflection(table[w.c[0] - 1].normalized_inertia, w.x[0], w.x[1]);
  };
  return BenchmarkProblem{"cantilever", space, std::move(objective), 30};
}

BenchmarkProblem toy_problem() {
  std::vector<std::string> levels;
  for (int i = 0; i <= 9; ++i) levels.push_back(std::to_string(i));
  DesignSpace space({
      VariableSpec{"x", ContinuousVar{0.0, 1.0}},
      VariableSpec{"c", CategoricalVar{levels}},
  });
  return BenchmarkProblem{
      "toy", space, [](const MixedPoint& w) { return toy_fn(w.x[0], w.c[0] - 1); }, 1000};
}

BenchmarkProblem problem_by_name(const std::string& name) {
  if (name == "cosine") return cosine_problem();
  if (name == "cantilever") return cantilever_problem();
  if (name == "toy") return toy_problem();
  throw std::invalid_argument("unknown problem '" + name + "'");
}

std::vector<std::string> problem_names() { return {"cosine", "cantilever", "toy"}; }

double rmse(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.empty() || predictions.size() != truths.size()) {
    throw std::invalid_argument("rmse: need equal nonzero lengths");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - truths[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predictions.size()));
}

double pva(std::span<const double> predictions, std::span<const double> variances,
           std::span<const double> truths) {
  if (predictions.empty() || predictions.size() != truths.size() ||
      predictions.size() != variances.size()) {
    throw std::invalid_argument("pva: need equal nonzero lengths");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (!(variances[i] > 0.0)) throw std::invalid_argument("pva: zero variance entry");
    const double d = predictions[i] - truths[i];
    sum += d * d / variances[i];
  }
  return std::log(sum / static_cast<double>(predictions.size()));
}

ModelBenchmarkReport run_model_benchmark(const BenchmarkProblem& problem,
                                         const std::vector<KernelSpec>& kernels,
                                         std::size_t doe_size,
                                         const std::vector<std::uint64_t>& seeds,
                                         const FitOptions& fit_options) {
  if (seeds.empty()) throw std::invalid_argument("run_model_benchmark: no seeds given");
  if (kernels.empty()) throw std::invalid_argument("run_model_benchmark: no kernels given");

  const Doe validation = problem.validation_set();
  ModelBenchmarkReport report;

  for (std::uint64_t seed : seeds) {
    Doe doe = lhs_sample(problem.space, doe_size, seed);
    for (const MixedPoint& w : doe.points) doe.y.push_back(problem.objective(w));

    for (const KernelSpec& spec : kernels) {
      ModelBenchmarkCell cell;
      cell.kernel = spec.name;
      cell.seed = seed;
      try {
        const KernelConfig config = kernel_config_from_name(
            problem.space, spec.name, spec.pls_levels, spec.continuous_components);
        cell.hyperparameters = hyperparameter_count(problem.space, config);
        FitOptions options = fit_options;
        options.seed = seed;
        if (spec.max_evals_per_start > 0) options.max_evals_per_start = spec.max_evals_per_start;
        const FitResult fitted = fit(problem.space, doe, config, options);
        cell.log_likelihood = fitted.report.best_log_likelihood;
        cell.fit_seconds = fitted.report.wall_seconds;

        std::vector<double> means(validation.size());
        std::vector<double> vars(validation.size());
        for (std::size_t i = 0; i < validation.size(); ++i) {
          means[i] = fitted.gp.predict_mean(validation.points[i]);
          vars[i] = fitted.gp.predict_variance(validation.points[i]);
        }
        cell.rmse = rmse(means, validation.y);
        try {
          cell.pva = pva(means, vars, validation.y);
        } catch (const std::invalid_argument&) {
          cell.pva = std::numeric_limits<double>::quiet_NaN();
        }
        if (problem.space.num_categorical() > 0 && !fitted.gp.constant_model()) {
          cell.level_matrix = fitted.gp.level_matrix(0);
        }
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      report.cells.push_back(std::move(cell));
    }
  }

  for (const KernelSpec& spec : kernels) {
    ModelBenchmarkSummary summary;
    summary.kernel = spec.name;
    std::vector<double> rmses, pvas;
    for (const ModelBenchmarkCell& cell : report.cells) {
      if (cell.kernel != spec.name) continue;
      if (!cell.error.empty()) {
        ++summary.failures;
        continue;
      }
      summary.hyperparameters = cell.hyperparameters;
      rmses.push_back(cell.rmse);
      if (std::isfinite(cell.pva)) pvas.push_back(cell.pva);
    }
    summary.median_rmse = median(rmses);
    summary.median_pva = median(pvas);
    report.summaries.push_back(std::move(summary));
  }
  return report;
}

double OptimBenchmarkSummary::median_best_at(std::size_t evaluations) const {
  if (median_curve.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t idx = std::min(evaluations, median_curve.size()) - 1;
  return median_curve[idx];
}

double OptimBenchmarkSummary::median_final() const {
  return median_curve.empty() ? std::numeric_limits<double>::quiet_NaN() : median_curve.back();
}

OptimBenchmarkReport run_optim_benchmark(const BenchmarkProblem& problem,
                                         const std::vector<KernelSpec>& kernels,
                                         const std::vector<int>& doe_sizes, int runs, int budget,
                                         const FitOptions& fit_options, std::uint64_t base_seed) {
  if (runs < 1) throw std::invalid_argument("run_optim_benchmark: runs must be >= 1");
  OptimBenchmarkReport report;

  struct Job {
    KernelSpec spec;
    int doe_size;
    int run;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const KernelSpec& spec : kernels) {
    for (int doe_size : doe_sizes) {
      for (int run = 0; run < runs; ++run) {
        const std::uint64_t seed =
            base_seed ^ (0x51ED5EEDULL + 7919ULL * run + 104729ULL * doe_size);
        jobs.push_back(Job{spec, doe_size, run, seed});
      }
    }
  }

  std::vector<OptimBenchmarkRun> results(jobs.size());
  const auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    OptimBenchmarkRun out;
    out.kernel = job.spec.name;
    out.doe_size = job.doe_size;
    out.run = job.run;
    try {
      EgoConfig config;
      config.kernel = kernel_config_from_name(problem.space, job.spec.name, job.spec.pls_levels,
                                              job.spec.continuous_components);
      config.doe_size = job.doe_size;
      config.budget = budget;
      config.fit_options = fit_options;
      config.fit_options.parallel = false;  // runs are parallel instead
      config.seed = job.seed;
      const EgoTrace trace = ego_run(problem.objective, problem.space, config);
      out.best_curve.reserve(trace.records.size());
      for (const EgoRecord& rec : trace.records) out.best_curve.push_back(rec.best_so_far);
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
    results[j] = std::move(out);
  };

  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> tasks;
  for (unsigned t = 0; t < std::min<std::size_t>(workers, jobs.size()); ++t) {
    tasks.push_back(std::async(std::launch::async, [&] {
      for (std::size_t j = next.fetch_add(1); j < jobs.size(); j = next.fetch_add(1)) run_job(j);
    }));
  }
  for (auto& task : tasks) task.get();
  report.runs = std::move(results);

  for (const KernelSpec& spec : kernels) {
    for (int doe_size : doe_sizes) {
      OptimBenchmarkSummary summary;
      summary.kernel = spec.name;
      summary.doe_size = doe_size;
      std::size_t curve_len = 0;
      for (const OptimBenchmarkRun& run : report.runs) {
        if (run.kernel != spec.name || run.doe_size != doe_size) continue;
        if (run.failed) {
          ++summary.failures;
        } else {
          ++summary.successful_runs;
          curve_len = std::max(curve_len, run.best_curve.size());
        }
      }
      for (std::size_t i = 0; i < curve_len; ++i) {
        std::vector<double> column;
        for (const OptimBenchmarkRun& run : report.runs) {
          if (run.kernel != spec.name || run.doe_size != doe_size || run.failed) continue;
          column.push_back(run.best_curve[std::min(i, run.best_curve.size() - 1)]);
        }
        summary.median_curve.push_back(median(std::move(column)));
      }
      report.summaries.push_back(std::move(summary));
    }
  }
  return report;
}

void write_model_report_csv(const ModelBenchmarkReport& report, const std::string& path) {
  std::string text = "kernel,seed,hyperparameters,rmse,pva,log_likelihood,fit_seconds,error\n";
  for (const ModelBenchmarkCell& cell : report.cells) {
    text += cell.kernel + "," + std::to_string(cell.seed) + "," +
            std::to_string(cell.hyperparameters) + "," + format_double(cell.rmse) + "," +
            format_double(cell.pva) + "," + format_double(cell.log_likelihood) + "," +
            format_double(cell.fit_seconds) + "," + cell.error + "\n";
  }
  write_text_file(path, text);
}

void write_model_report_json(const ModelBenchmarkReport& report, const std::string& path) {
  nlohmann::json j;
  j["summaries"] = nlohmann::json::array();
  for (const ModelBenchmarkSummary& s : report.summaries) {
    j["summaries"].push_back({{"kernel", s.kernel},
                              {"hyperparameters", s.hyperparameters},
                              {"median_rmse", s.median_rmse},
                              {"median_pva", s.median_pva},
                              {"failures", s.failures}});
  }
  write_text_file(path, j.dump(2) + "\n");
}

void write_optim_report_csv(const OptimBenchmarkReport& report, const std::string& path) {
  std::string text = "kernel,doe_size,run,evaluation,best_so_far\n";
  for (const OptimBenchmarkRun& run : report.runs) {
    if (run.failed) continue;
    for (std::size_t i = 0; i < run.best_curve.size(); ++i) {
      text += run.kernel + "," + std::to_string(run.doe_size) + "," + std::to_string(run.run) +
              "," + std::to_string(i + 1) + "," + format_double(run.best_curve[i]) + "\n";
    }
  }
  write_text_file(path, text);
}

void write_optim_report_json(const OptimBenchmarkReport& report, const std::string& path) {
  nlohmann::json j;
  j["summaries"] = nlohmann::json::array();
  for (const OptimBenchmarkSummary& s : report.summaries) {
    j["summaries"].push_back({{"kernel", s.kernel},
                              {"doe_size", s.doe_size},
                              {"successful_runs", s.successful_runs},
                              {"failures", s.failures},
                              {"median_best_at_25", s.median_best_at(25)},
                              {"median_final", s.median_final()},
                              {"median_curve", s.median_curve}});
  }
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace mixedgp
