#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mixedgp/gp.hpp"

namespace mixedgp {

struct AcquisitionSettings {
  int continuous_multistarts = 10;
  long combo_cap = 10000;         // enumerate level/integer combinations up to this
  long max_evals_per_start = 0;   // 0 -> 150 * continuous dimension
};

/// EI = (f_min - mu) Phi(u) + sigma phi(u) with u = (f_min - mu)/sigma;
/// collapses to max(f_min - mu, 0) at sigma = 0.
double expected_improvement(const TrainedGp& gp, const MixedPoint& w, double f_min);

struct Proposal {
  MixedPoint point;
  double ei = 0.0;
  bool degenerate = false;  // acquisition was flat; point is exploratory
};

/// Maximizes EI: enumerates (or samples) the discrete combinations and runs
/// multistart bounded search over the continuous coordinates for each. Never
/// returns a point duplicating the DoE (1e-8 guard in scaled coordinates).
Proposal propose_next(const TrainedGp& gp, double f_min, const AcquisitionSettings& settings,
                      std::uint64_t seed);

struct EgoConfig {
  KernelConfig kernel;
  int doe_size = 5;
  int budget = 55;
  AcquisitionSettings acquisition;
  FitOptions fit_options;
  std::uint64_t seed = 0;
};

struct EgoRecord {
  int iteration = 0;  // 0 for initial-DoE rows
  MixedPoint point;
  double y = 0.0;
  bool failed = false;
  double best_so_far = 0.0;
  double fit_log_likelihood = 0.0;
  bool degenerate_acquisition = false;
};

struct EgoTrace {
  std::vector<EgoRecord> records;
  MixedPoint best_point;
  double best_value = 0.0;
  int failures = 0;
};

/// Unconstrained EGO loop (minimization): LHS DoE, then budget iterations of
/// fit / propose / evaluate / append. Failed evaluations (thrown exception
/// or NaN) are recorded and excluded from the DoE.
EgoTrace ego_run(const std::function<double(const MixedPoint&)>& objective,
                 const DesignSpace& space, const EgoConfig& config);

}  // namespace mixedgp
