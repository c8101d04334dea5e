#pragma once

#include <Eigen/Dense>
#include <functional>

namespace mixedgp {

struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct SearchResult {
  Eigen::VectorXd x;
  double value = 0.0;
  long evaluations = 0;
};

/// Derivative-free bounded minimizer: coordinate pattern search with
/// per-coordinate step expansion/contraction. Stops when every step falls
/// below step_tol_rel relative to its coordinate range or after max_evals
/// objective evaluations. Deterministic.
SearchResult pattern_search_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& start, const BoxBounds& bounds,
                                     long max_evals, double step_tol_rel = 1e-4);

}  // namespace mixedgp
