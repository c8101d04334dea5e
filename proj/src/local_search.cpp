#include "mixedgp/local_search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mixedgp {

SearchResult pattern_search_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                     const Eigen::VectorXd& start, const BoxBounds& bounds,
                                     long max_evals, double step_tol_rel) {
  const Eigen::Index dim = start.size();
  if (bounds.lower.size() != dim || bounds.upper.size() != dim) {
    throw std::invalid_argument("pattern_search_minimize: bounds/start dimension mismatch");
  }
  for (Eigen::Index j = 0; j < dim; ++j) {
    if (!(bounds.lower[j] < bounds.upper[j])) {
      throw std::invalid_argument("pattern_search_minimize: lower bound must be < upper");
    }
  }
  if (max_evals < 1) max_evals = 1;

  const Eigen::VectorXd range = bounds.upper - bounds.lower;
  Eigen::VectorXd x = start.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
  Eigen::VectorXd step = 0.25 * range;

  SearchResult result;
  result.value = f(x);
  result.evaluations = 1;

  while (result.evaluations < max_evals) {
    bool improved = false;
    for (Eigen::Index j = 0; j < dim && result.evaluations < max_evals; ++j) {
      for (double dir : {+1.0, -1.0}) {
        const double trial = std::clamp(x[j] + dir * step[j], bounds.lower[j], bounds.upper[j]);
        if (trial == x[j]) continue;
        const double saved = x[j];
        x[j] = trial;
        const double value = f(x);
        ++result.evaluations;
        if (value < result.value) {
          result.value = value;
          step[j] = std::min(2.0 * step[j], 0.5 * range[j]);
          improved = true;
          break;
        }
        x[j] = saved;
        if (result.evaluations >= max_evals) break;
      }
    }
    if (!improved) {
      step *= 0.5;
      if ((step.array() < step_tol_rel * range.array()).all()) break;
    }
  }

  result.x = x;
  return result;
}

}  // namespace mixedgp
