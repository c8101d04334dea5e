// Command-line front end: sampling, fitting, prediction, evaluation,
// optimization, benchmarking and correlation-matrix export.
//
// Exit codes: 0 success, 2 usage/input error, 3 numerical failure.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixedgp/bayesopt.hpp"
#include "mixedgp/benchmarks.hpp"
#include "mixedgp/design_space.hpp"
#include "mixedgp/gp.hpp"
#include "mixedgp/io.hpp"

namespace {

using namespace mixedgp;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Runs one evaluation through a child process: the point as JSON on stdin,
// {"y": value} expected on stdout, nonzero exit treated as a failure.
double run_external_evaluator(const std::string& command, const std::string& point_json) {
  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0) {
    throw std::runtime_error("evaluator: pipe() failed");
  }
  const pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("evaluator: fork() failed");
  if (pid == 0) {
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(to_child[0]);
  close(from_child[1]);

  const std::string payload = point_json + "\n";
  ssize_t written = write(to_child[1], payload.data(), payload.size());
  close(to_child[1]);

  std::string output;
  char buf[4096];
  ssize_t got;
  while ((got = read(from_child[0], buf, sizeof(buf))) > 0) output.append(buf, got);
  close(from_child[0]);

  int status = 0;
  waitpid(pid, &status, 0);
  if (written < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw std::runtime_error("evaluator exited with a failure");
  }
  const auto parsed = nlohmann::json::parse(output, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("y")) {
    throw std::runtime_error("evaluator did not return {\"y\": value}");
  }
  return parsed.at("y").get<double>();
}

std::vector<double> predict_all(const TrainedGp& gp, const std::vector<MixedPoint>& points,
                                std::vector<double>* variances) {
  std::vector<double> means(points.size());
  if (variances != nullptr) variances->resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    means[i] = gp.predict_mean(points[i]);
    if (variances != nullptr) (*variances)[i] = gp.predict_variance(points[i]);
  }
  return means;
}

int run(int argc, char** argv) {
  CLI::App app{"Gaussian-process surrogates over mixed continuous/integer/categorical inputs"};
  app.require_subcommand(1);

  // ---- sample ----
  std::string sample_space, sample_out;
  std::size_t sample_n = 0;
  std::uint64_t sample_seed = 0;
  auto* sample = app.add_subcommand("sample", "Draw a Latin hypercube DoE and write it as CSV");
  sample->add_option("--space", sample_space, "design space JSON")->required();
  sample->add_option("--n", sample_n, "number of points")->required();
  sample->add_option("--seed", sample_seed, "RNG seed");
  sample->add_option("--out", sample_out, "output CSV")->required();
  sample->callback([&] {
    if (sample_n == 0) throw std::invalid_argument("--n must be >= 1");
    const DesignSpace space = load_design_space(sample_space);
    save_doe_csv(space, lhs_sample(space, sample_n, sample_seed), sample_out);
  });

  // ---- fit ----
  std::string fit_space, fit_doe, fit_kernel, fit_out;
  int fit_pls_levels = 2;
  std::optional<int> fit_components;
  int fit_starts = 10;
  long fit_max_evals = 0;
  std::uint64_t fit_seed = 0;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a GP on a DoE CSV and write the model JSON");
  fit_cmd->add_option("--space", fit_space, "design space JSON")->required();
  fit_cmd->add_option("--doe", fit_doe, "DoE CSV with a y column")->required();
  fit_cmd->add_option("--kernel", fit_kernel, "gd|cr|ehh|hh|hh-pls|ehh-pls|cr-pls")->required();
  fit_cmd->add_option("--pls-levels", fit_pls_levels, "reduced level count for *-pls kernels");
  fit_cmd->add_option("--cont-components", fit_components, "PLS components for continuous dims");
  fit_cmd->add_option("--starts", fit_starts, "multistart count");
  fit_cmd->add_option("--max-evals", fit_max_evals, "objective evaluations per start");
  fit_cmd->add_option("--seed", fit_seed, "RNG seed");
  fit_cmd->add_option("--out", fit_out, "output model JSON")->required();
  fit_cmd->callback([&] {
    const DesignSpace space = load_design_space(fit_space);
    const Doe doe = load_doe_csv(space, fit_doe);
    if (!doe.has_responses()) throw std::invalid_argument("DoE CSV has no y column");
    const KernelConfig config =
        kernel_config_from_name(space, fit_kernel, fit_pls_levels, fit_components);
    FitOptions options;
    options.starts = fit_starts;
    options.seed = fit_seed;
    options.max_evals_per_start = fit_max_evals;
    const FitResult result = fit(space, doe, config, options);
    save_model(result.gp, fit_out);
    std::cout << "kernel: " << fit_kernel << "\n"
              << "hyperparameters: " << result.report.hyperparameter_count << "\n"
              << "log_likelihood: " << fmt(result.report.best_log_likelihood) << "\n"
              << "nugget: " << fmt(result.gp.nugget()) << "\n"
              << "evaluations: " << result.report.total_evaluations << "\n"
              << "wall_seconds: " << fmt(result.report.wall_seconds) << "\n";
    for (const std::string& warning : result.report.warnings) {
      std::cerr << "warning: " << warning << "\n";
    }
  });

  // ---- predict ----
  std::string predict_model, predict_points, predict_out;
  auto* predict = app.add_subcommand("predict", "Predict mean/variance at points from a CSV");
  predict->add_option("--model", predict_model, "model JSON")->required();
  predict->add_option("--points", predict_points, "points CSV")->required();
  predict->add_option("--out", predict_out, "output CSV")->required();
  predict->callback([&] {
    const TrainedGp gp = load_model(predict_model);
    const Doe points = load_doe_csv(gp.space(), predict_points);
    std::vector<double> variances;
    const std::vector<double> means = predict_all(gp, points.points, &variances);
    std::string text = "mean,variance\n";
    for (std::size_t i = 0; i < means.size(); ++i) {
      text += fmt(means[i]) + "," + fmt(variances[i]) + "\n";
    }
    std::ofstream out(predict_out);
    if (!out) throw std::invalid_argument("cannot open '" + predict_out + "' for writing");
    out << text;
  });

  // ---- evaluate ----
  std::string eval_model, eval_problem;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model on a problem's validation grid");
  evaluate->add_option("--model", eval_model, "model JSON")->required();
  evaluate->add_option("--problem", eval_problem, "cosine|cantilever|toy")->required();
  evaluate->callback([&] {
    const TrainedGp gp = load_model(eval_model);
    const BenchmarkProblem problem = problem_by_name(eval_problem);
    if (design_space_to_json(problem.space) != design_space_to_json(gp.space())) {
      throw std::invalid_argument("model space does not match problem '" + eval_problem + "'");
    }
    const Doe grid = problem.validation_set();
    std::vector<double> variances;
    const std::vector<double> means = predict_all(gp, grid.points, &variances);
    std::cout << "rmse " << fmt(rmse(means, grid.y)) << "\n";
    try {
      std::cout << "pva " << fmt(pva(means, variances, grid.y)) << "\n";
    } catch (const std::invalid_argument& e) {
      std::cerr << "warning: " << e.what() << "\n";
      std::cout << "pva nan\n";
    }
  });

  // ---- optimize ----
  std::string opt_problem, opt_space, opt_evaluator, opt_kernel = "gd", opt_out, opt_summary;
  int opt_doe = 5, opt_budget = 55, opt_pls_levels = 2, opt_starts = 10;
  std::optional<int> opt_components;
  long opt_max_evals = 0;
  std::uint64_t opt_seed = 0;
  auto* optimize = app.add_subcommand("optimize", "Run the EGO loop and write its trace CSV");
  optimize->add_option("--problem", opt_problem, "built-in problem name");
  optimize->add_option("--space", opt_space, "design space JSON (with --evaluator)");
  optimize->add_option("--evaluator", opt_evaluator,
                       "shell command evaluating one JSON point from stdin");
  optimize->add_option("--kernel", opt_kernel, "kernel name");
  optimize->add_option("--pls-levels", opt_pls_levels, "reduced level count for *-pls kernels");
  optimize->add_option("--cont-components", opt_components, "PLS components for continuous dims");
  optimize->add_option("--doe-size", opt_doe, "initial DoE size");
  optimize->add_option("--budget", opt_budget, "infill evaluations");
  optimize->add_option("--starts", opt_starts, "fit multistart count");
  optimize->add_option("--max-evals", opt_max_evals, "fit evaluations per start");
  optimize->add_option("--seed", opt_seed, "RNG seed");
  optimize->add_option("--out", opt_out, "trace CSV")->required();
  optimize->add_option("--summary", opt_summary, "summary JSON");
  optimize->callback([&] {
    DesignSpace space({VariableSpec{"placeholder", ContinuousVar{0, 1}}});
    std::function<double(const MixedPoint&)> objective;
    if (!opt_problem.empty()) {
      const BenchmarkProblem problem = problem_by_name(opt_problem);
      space = problem.space;
      objective = problem.objective;
    } else if (!opt_space.empty() && !opt_evaluator.empty()) {
      space = load_design_space(opt_space);
      const std::string command = opt_evaluator;
      const DesignSpace space_copy = space;
      objective = [command, space_copy](const MixedPoint& w) {
        return run_external_evaluator(command, point_to_json(space_copy, w));
      };
    } else {
      throw std::invalid_argument("need --problem or both --space and --evaluator");
    }
    EgoConfig config;
    config.kernel = kernel_config_from_name(space, opt_kernel, opt_pls_levels, opt_components);
    config.doe_size = opt_doe;
    config.budget = opt_budget;
    config.fit_options.starts = opt_starts;
    config.fit_options.max_evals_per_start = opt_max_evals;
    config.seed = opt_seed;
    const EgoTrace trace = ego_run(objective, space, config);
    save_trace_csv(space, trace, opt_out);
    if (!opt_summary.empty()) save_trace_summary_json(space, trace, opt_summary);
    std::cout << "evaluations: " << trace.records.size() << "\n"
              << "failures: " << trace.failures << "\n"
              << "best: " << fmt(trace.best_value) << "\n";
  });

  // ---- benchmark ----
  std::string bench_problem, bench_mode = "model", bench_prefix;
  std::vector<std::string> bench_kernels;
  std::size_t bench_doe = 98;
  int bench_seeds = 5, bench_runs = 20, bench_budget = 55, bench_pls_levels = 2,
      bench_starts = 10;
  std::vector<int> bench_doe_sizes;
  long bench_max_evals = 0;
  std::uint64_t bench_seed = 0;
  auto* benchmark = app.add_subcommand("benchmark", "Model or optimization kernel comparison");
  benchmark->add_option("--problem", bench_problem, "cosine|cantilever|toy")->required();
  benchmark->add_option("--mode", bench_mode, "model|optim");
  benchmark->add_option("--kernels", bench_kernels, "comma-separated kernel names")
      ->required()
      ->delimiter(',');
  benchmark->add_option("--doe-size", bench_doe, "DoE size (model mode)");
  benchmark->add_option("--seeds", bench_seeds, "seeds (model mode)");
  benchmark->add_option("--runs", bench_runs, "runs per cell (optim mode)");
  benchmark->add_option("--budget", bench_budget, "infills per run (optim mode)");
  benchmark->add_option("--doe-sizes", bench_doe_sizes, "DoE sizes (optim mode)")->delimiter(',');
  benchmark->add_option("--pls-levels", bench_pls_levels, "reduced level count");
  benchmark->add_option("--starts", bench_starts, "fit multistart count");
  benchmark->add_option("--max-evals", bench_max_evals, "fit evaluations per start");
  benchmark->add_option("--seed", bench_seed, "base seed");
  benchmark->add_option("--out-prefix", bench_prefix, "output path prefix")->required();
  benchmark->callback([&] {
    const BenchmarkProblem problem = problem_by_name(bench_problem);
    std::vector<KernelSpec> specs;
    for (const std::string& name : bench_kernels) {
      specs.push_back(KernelSpec{name, bench_pls_levels, std::nullopt});
    }
    FitOptions options;
    options.starts = bench_starts;
    options.max_evals_per_start = bench_max_evals;
    if (bench_mode == "model") {
      std::vector<std::uint64_t> seeds;
      for (int s = 0; s < bench_seeds; ++s) seeds.push_back(bench_seed + 1 + s);
      const ModelBenchmarkReport report =
          run_model_benchmark(problem, specs, bench_doe, seeds, options);
      write_model_report_csv(report, bench_prefix + "_model.csv");
      write_model_report_json(report, bench_prefix + "_model.json");
      for (const ModelBenchmarkCell& cell : report.cells) {
        if (cell.level_matrix.size() > 0) {
          save_matrix_csv(cell.level_matrix, bench_prefix + "_corr_" + cell.kernel + "_seed" +
                                                 std::to_string(cell.seed) + ".csv");
        }
      }
      for (const ModelBenchmarkSummary& s : report.summaries) {
        std::cout << s.kernel << ": hyperparameters " << s.hyperparameters << ", median rmse "
                  << fmt(s.median_rmse) << ", median pva " << fmt(s.median_pva) << ", failures "
                  << s.failures << "\n";
      }
    } else if (bench_mode == "optim") {
      if (bench_doe_sizes.empty()) bench_doe_sizes = {5};
      const OptimBenchmarkReport report = run_optim_benchmark(
          problem, specs, bench_doe_sizes, bench_runs, bench_budget, options, bench_seed);
      write_optim_report_csv(report, bench_prefix + "_optim.csv");
      write_optim_report_json(report, bench_prefix + "_optim.json");
      for (const OptimBenchmarkSummary& s : report.summaries) {
        std::cout << s.kernel << " (doe " << s.doe_size << "): median best@25 "
                  << fmt(s.median_best_at(25)) << ", median final " << fmt(s.median_final())
                  << ", failures " << s.failures << "\n";
      }
    } else {
      throw std::invalid_argument("--mode must be model or optim");
    }
  });

  // ---- export-corr ----
  std::string corr_model, corr_variable, corr_out;
  auto* export_corr =
      app.add_subcommand("export-corr", "Export a fitted level-correlation matrix as CSV");
  export_corr->add_option("--model", corr_model, "model JSON")->required();
  export_corr->add_option("--variable", corr_variable, "categorical variable name");
  export_corr->add_option("--out", corr_out, "output CSV")->required();
  export_corr->callback([&] {
    const TrainedGp gp = load_model(corr_model);
    const DesignSpace& space = gp.space();
    if (space.num_categorical() == 0) {
      throw std::invalid_argument("model has no categorical variable");
    }
    std::size_t index = 0;
    if (!corr_variable.empty()) {
      bool found = false;
      for (std::size_t i = 0; i < space.num_categorical(); ++i) {
        if (space.categorical_variable(i).name == corr_variable) {
          index = i;
          found = true;
          break;
        }
      }
      if (!found) {
        throw std::invalid_argument("no categorical variable named '" + corr_variable + "'");
      }
    }
    save_matrix_csv(gp.level_matrix(index), corr_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
