#pragma once

#include <Eigen/Dense>
#include <string>

#include "mixedgp/design_space.hpp"
#include "mixedgp/gp.hpp"
#include "mixedgp/bayesopt.hpp"

namespace mixedgp {

// Design-space JSON:
// {"variables":[{"name":..., "type":"continuous"|"integer"|"categorical",
//                "bounds":[lo,hi] | "levels":[...]}]}
DesignSpace design_space_from_json(const std::string& text);
std::string design_space_to_json(const DesignSpace& space);
DesignSpace load_design_space(const std::string& path);
void save_design_space(const DesignSpace& space, const std::string& path);

// DoE CSV: header row with variable names (categorical written as level
// label) and an optional final column y.
Doe load_doe_csv(const DesignSpace& space, const std::string& path);
void save_doe_csv(const DesignSpace& space, const Doe& doe, const std::string& path);

// Model JSON: space, config, packed hyperparameters, DoE and nugget; the
// factorization is recomputed on load.
void save_model(const TrainedGp& gp, const std::string& path);
TrainedGp load_model(const std::string& path);

void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);

void save_trace_csv(const DesignSpace& space, const EgoTrace& trace, const std::string& path);
void save_trace_summary_json(const DesignSpace& space, const EgoTrace& trace,
                             const std::string& path);

/// Serializes a mixed point as a one-level JSON object {"name": value, ...}
/// with categorical values as level labels (the evaluator-subprocess wire
/// format).
std::string point_to_json(const DesignSpace& space, const MixedPoint& w);

}  // namespace mixedgp
