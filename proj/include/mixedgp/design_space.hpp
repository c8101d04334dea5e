#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace mixedgp {

struct ContinuousVar {
  double lower = 0.0;
  double upper = 1.0;
};

struct IntegerVar {
  std::int64_t lower = 0;
  std::int64_t upper = 1;
};

struct CategoricalVar {
  std::vector<std::string> levels;  // L >= 2, distinct labels
};

/// One design variable: a name plus its kind.
struct VariableSpec {
  std::string name;
  std::variant<ContinuousVar, IntegerVar, CategoricalVar> kind;

  bool is_continuous() const { return std::holds_alternative<ContinuousVar>(kind); }
  bool is_integer() const { return std::holds_alternative<IntegerVar>(kind); }
  bool is_categorical() const { return std::holds_alternative<CategoricalVar>(kind); }
  const ContinuousVar& as_continuous() const { return std::get<ContinuousVar>(kind); }
  const IntegerVar& as_integer() const { return std::get<IntegerVar>(kind); }
  const CategoricalVar& as_categorical() const { return std::get<CategoricalVar>(kind); }
};

/// A point in a mixed space: continuous values x, integer values z and
/// 1-based categorical level indices c, each in design-space order.
struct MixedPoint {
  std::vector<double> x;
  std::vector<std::int64_t> z;
  std::vector<int> c;
};

/// Ordered collection of mixed variables. Validates its invariants on
/// construction and is immutable afterwards.
class DesignSpace {
 public:
  explicit DesignSpace(std::vector<VariableSpec> variables);

  const std::vector<VariableSpec>& variables() const { return variables_; }
  std::size_t num_variables() const { return variables_.size(); }

  std::size_t num_continuous() const { return continuous_.size(); }
  std::size_t num_integer() const { return integer_.size(); }
  std::size_t num_categorical() const { return categorical_.size(); }

  /// n + m + sum of level counts: dimension of the one-hot relaxation.
  std::size_t relaxed_dimension() const;

  /// Variable backing the i-th continuous / integer / categorical slot.
  const VariableSpec& continuous_variable(std::size_t i) const { return variables_[continuous_[i]]; }
  const VariableSpec& integer_variable(std::size_t i) const { return variables_[integer_[i]]; }
  const VariableSpec& categorical_variable(std::size_t i) const { return variables_[categorical_[i]]; }

  std::size_t level_count(std::size_t cat_index) const {
    return categorical_variable(cat_index).as_categorical().levels.size();
  }

  /// Index of a variable by name, or -1 when absent.
  int find_variable(const std::string& name) const;

 private:
  std::vector<VariableSpec> variables_;
  std::vector<std::size_t> continuous_;   // variable index per continuous slot
  std::vector<std::size_t> integer_;
  std::vector<std::size_t> categorical_;
};

/// Design of experiments: points plus (optionally) their responses.
struct Doe {
  std::vector<MixedPoint> points;
  std::vector<double> y;  // empty until evaluated

  std::size_t size() const { return points.size(); }
  bool has_responses() const { return !y.empty(); }
};

/// Throws std::invalid_argument when any component of w violates its spec.
void validate_point(const DesignSpace& space, const MixedPoint& w);

/// Plain random-permutation Latin hypercube sample. Continuous axes get one
/// point per stratum; integer and categorical axes bin an underlying LHS
/// axis uniformly. Deterministic given the seed.
Doe lhs_sample(const DesignSpace& space, std::size_t n_t, std::uint64_t seed);

/// One-hot continuous relaxation: x copied, z cast to real, each categorical
/// contributing a basis vector of length L_i.
std::vector<double> one_hot_relax(const DesignSpace& space, const MixedPoint& w);

/// Pair-relaxed encoding of a categorical level over all unordered level
/// pairs (canonical lexicographic pair order). Exactly L-1 entries are 1:
/// those whose pair contains `level`.
std::vector<int> zeta_encode(int level_count, int level);

/// Componentwise product of two pair-relaxed encodings. For distinct levels
/// the result is one-hot at the index of their pair.
std::vector<int> zeta_hadamard(const std::vector<int>& a, const std::vector<int>& b);

/// Cartesian product of `resolution` evenly spaced values per continuous
/// axis, every integer value and every categorical level. Throws when the
/// grid would exceed `max_points`.
Doe validation_grid(const DesignSpace& space, std::size_t resolution,
                    std::size_t max_points = 2000000);

}  // namespace mixedgp
