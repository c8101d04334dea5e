#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "mixedgp/pls.hpp"

namespace mixedgp {

/// Correlation floor from the implementation constants: exp(-20) ~ 2.06e-9.
inline constexpr double kDefaultEpsilon = 2.06e-9;

/// Angle set of a hypersphere decomposition: L(L-1)/2 angles in [0, pi].
struct HypersphereAngles {
  int level_count = 0;
  std::vector<double> angles;
};

/// Lower-triangular factor C with unit-norm rows. Row 1 is e1; row k is the
/// hyperspherical point of its k-1 angles (cos first, cumulative sin
/// products, pure sin product last). C C^T has unit diagonal and entries in
/// [-1, 1].
Eigen::MatrixXd hypersphere_factor(const HypersphereAngles& a);

// Per-variable parameterizations of the homogeneous categorical kernel
// family. Same-level correlation is 1 for every kind; the distinct-level
// closed forms are:
//   GD   exp(-theta)
//   CR   exp(-diag[a] - diag[b])
//   EHH  epsilon^(1 - [CC^T]_ab)
//   HH   [CC^T]_ab
// and for the PLS-reduced variants the off-diagonal is reconstructed from
// the reduced matrix through the squared rotation weights.

struct GdParam {
  double theta = 0.0;
  int level_count = 2;
};

struct CrParam {
  std::vector<double> diag;  // one nonnegative entry per level
};

struct EhhParam {
  HypersphereAngles angles;
  double epsilon = kDefaultEpsilon;
};

struct HhParam {
  HypersphereAngles angles;
};

struct HhPlsParam {
  HypersphereAngles reduced_angles;  // over l levels
  MatrixPlsRotation rotation;
};

struct EhhPlsParam {
  HypersphereAngles reduced_angles;
  MatrixPlsRotation rotation;
  double epsilon = kDefaultEpsilon;
};

using CategoricalKernelParam =
    std::variant<GdParam, CrParam, EhhParam, HhParam, HhPlsParam, EhhPlsParam>;

/// Number of levels the parameterization covers.
int param_level_count(const CategoricalKernelParam& p);

/// Correlation between two levels (1-based). Returns 1 when the levels
/// coincide.
double level_correlation(const CategoricalKernelParam& p, int level_a, int level_b);

/// PLS-reduced correlation: the reduced C C^T entries are pushed through the
/// rotation weights; HH_PLS returns the reconstructed entry directly and
/// EHH_PLS returns exp(-2 Phi).
double level_correlation_pls(const HhPlsParam& p, int level_a, int level_b);
double level_correlation_pls(const EhhPlsParam& p, int level_a, int level_b);

/// Full L x L symmetric unit-diagonal level matrix.
Eigen::MatrixXd build_level_matrix(const CategoricalKernelParam& p);

}  // namespace mixedgp
