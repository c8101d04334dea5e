#include "mixedgp/design_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "mixedgp/pls.hpp"

namespace mixedgp {

DesignSpace::DesignSpace(std::vector<VariableSpec> variables) : variables_(std::move(variables)) {
  if (variables_.empty()) {
    throw std::invalid_argument("design space needs at least one variable");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    const VariableSpec& v = variables_[i];
    if (v.name.empty()) {
      throw std::invalid_argument("variable names must be nonempty");
    }
    if (!names.insert(v.name).second) {
      throw std::invalid_argument("duplicate variable name '" + v.name + "'");
    }
    if (v.is_continuous()) {
      const auto& c = v.as_continuous();
      if (!(c.lower < c.upper)) {
        throw std::invalid_argument("variable '" + v.name + "': lower bound must be < upper");
      }
      continuous_.push_back(i);
    } else if (v.is_integer()) {
      const auto& z = v.as_integer();
      if (!(z.lower < z.upper)) {
        throw std::invalid_argument("variable '" + v.name + "': lower bound must be < upper");
      }
      integer_.push_back(i);
    } else {
      const auto& c = v.as_categorical();
      if (c.levels.size() < 2) {
        throw std::invalid_argument("variable '" + v.name + "': needs at least 2 levels");
      }
      std::set<std::string> labels(c.levels.begin(), c.levels.end());
      if (labels.size() != c.levels.size()) {
        throw std::invalid_argument("variable '" + v.name + "': duplicate level labels");
      }
      categorical_.push_back(i);
    }
  }
}

std::size_t DesignSpace::relaxed_dimension() const {
  std::size_t dim = num_continuous() + num_integer();
  for (std::size_t i = 0; i < num_categorical(); ++i) dim += level_count(i);
  return dim;
}

int DesignSpace::find_variable(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void validate_point(const DesignSpace& space, const MixedPoint& w) {
  if (w.x.size() != space.num_continuous() || w.z.size() != space.num_integer() ||
      w.c.size() != space.num_categorical()) {
    throw std::invalid_argument("point shape does not match the design space");
  }
  for (std::size_t i = 0; i < w.x.size(); ++i) {
    const VariableSpec& v = space.continuous_variable(i);
    const auto& b = v.as_continuous();
    if (!std::isfinite(w.x[i]) || w.x[i] < b.lower || w.x[i] > b.upper) {
      throw std::invalid_argument("variable '" + v.name + "': value " + std::to_string(w.x[i]) +
                                  " outside [" + std::to_string(b.lower) + ", " +
                                  std::to_string(b.upper) + "]");
    }
  }
  for (std::size_t i = 0; i < w.z.size(); ++i) {
    const VariableSpec& v = space.integer_variable(i);
    const auto& b = v.as_integer();
    if (w.z[i] < b.lower || w.z[i] > b.upper) {
      throw std::invalid_argument("variable '" + v.name + "': value " + std::to_string(w.z[i]) +
                                  " outside [" + std::to_string(b.lower) + ", " +
                                  std::to_string(b.upper) + "]");
    }
  }
  for (std::size_t i = 0; i < w.c.size(); ++i) {
    const VariableSpec& v = space.categorical_variable(i);
    const int levels = static_cast<int>(v.as_categorical().levels.size());
    if (w.c[i] < 1 || w.c[i] > levels) {
      throw std::invalid_argument("variable '" + v.name + "': level index " +
                                  std::to_string(w.c[i]) + " outside 1.." +
                                  std::to_string(levels));
    }
  }
}

Doe lhs_sample(const DesignSpace& space, std::size_t n_t, std::uint64_t seed) {
  if (n_t < 1) throw std::invalid_argument("lhs_sample: n_t must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // One stratified axis per variable: u_j = (perm[j] + jitter) / n_t.
  const std::size_t n_vars = space.num_variables();
  std::vector<std::vector<double>> axes(n_vars);
  for (std::size_t v = 0; v < n_vars; ++v) {
    std::vector<std::size_t> perm(n_t);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    axes[v].resize(n_t);
    for (std::size_t j = 0; j < n_t; ++j) {
      axes[v][j] = (static_cast<double>(perm[j]) + unit(rng)) / static_cast<double>(n_t);
    }
  }

  Doe doe;
  doe.points.resize(n_t);
  for (std::size_t j = 0; j < n_t; ++j) {
    MixedPoint& w = doe.points[j];
    std::size_t ci = 0, zi = 0, li = 0;
    for (std::size_t v = 0; v < n_vars; ++v) {
      const VariableSpec& spec = space.variables()[v];
      const double u = axes[v][j];
      if (spec.is_continuous()) {
        const auto& b = spec.as_continuous();
        w.x.push_back(b.lower + u * (b.upper - b.lower));
        ++ci;
      } else if (spec.is_integer()) {
        const auto& b = spec.as_integer();
        const auto span = static_cast<double>(b.upper - b.lower + 1);
        auto value = b.lower + static_cast<std::int64_t>(std::floor(u * span));
        w.z.push_back(std::min(value, b.upper));
        ++zi;
      } else {
        const int levels = static_cast<int>(spec.as_categorical().levels.size());
        int level = 1 + static_cast<int>(std::floor(u * levels));
        w.c.push_back(std::min(level, levels));
        ++li;
      }
    }
    (void)ci;
    (void)zi;
    (void)li;
  }
  return doe;
}

std::vector<double> one_hot_relax(const DesignSpace& space, const MixedPoint& w) {
  validate_point(space, w);
  std::vector<double> out;
  out.reserve(space.relaxed_dimension());
  for (double v : w.x) out.push_back(v);
  for (std::int64_t v : w.z) out.push_back(static_cast<double>(v));
  for (std::size_t i = 0; i < w.c.size(); ++i) {
    const std::size_t levels = space.level_count(i);
    for (std::size_t l = 1; l <= levels; ++l) {
      out.push_back(static_cast<int>(l) == w.c[i] ? 1.0 : 0.0);
    }
  }
  return out;
}

std::vector<int> zeta_encode(int level_count, int level) {
  if (level_count < 2) throw std::invalid_argument("zeta_encode: need at least 2 levels");
  if (level < 1 || level > level_count) {
    throw std::invalid_argument("zeta_encode: level " + std::to_string(level) + " outside 1.." +
                                std::to_string(level_count));
  }
  std::vector<int> out(static_cast<std::size_t>(level_count) * (level_count - 1) / 2, 0);
  for (int other = 1; other <= level_count; ++other) {
    if (other == level) continue;
    const int k = std::min(level, other);
    const int kp = std::max(level, other);
    out[psi_index(k, kp, level_count) - 1] = 1;
  }
  return out;
}

std::vector<int> zeta_hadamard(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("zeta_hadamard: length mismatch");
  std::vector<int> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Doe validation_grid(const DesignSpace& space, std::size_t resolution, std::size_t max_points) {
  if (resolution < 2) throw std::invalid_argument("validation_grid: resolution must be >= 2");

  // Per-variable candidate values, in design-space order.
  const std::size_t n_vars = space.num_variables();
  std::vector<std::size_t> sizes(n_vars);
  std::size_t total = 1;
  for (std::size_t v = 0; v < n_vars; ++v) {
    const VariableSpec& spec = space.variables()[v];
    if (spec.is_continuous()) {
      sizes[v] = resolution;
    } else if (spec.is_integer()) {
      const auto& b = spec.as_integer();
      sizes[v] = static_cast<std::size_t>(b.upper - b.lower + 1);
    } else {
      sizes[v] = spec.as_categorical().levels.size();
    }
    if (total > max_points / sizes[v]) {
      throw std::invalid_argument("validation_grid: grid larger than the configured cap");
    }
    total *= sizes[v];
  }

  Doe doe;
  doe.points.reserve(total);
  std::vector<std::size_t> idx(n_vars, 0);
  for (std::size_t count = 0; count < total; ++count) {
    MixedPoint w;
    for (std::size_t v = 0; v < n_vars; ++v) {
      const VariableSpec& spec = space.variables()[v];
      if (spec.is_continuous()) {
        const auto& b = spec.as_continuous();
        const double t = static_cast<double>(idx[v]) / static_cast<double>(resolution - 1);
        w.x.push_back(b.lower + t * (b.upper - b.lower));
      } else if (spec.is_integer()) {
        w.z.push_back(spec.as_integer().lower + static_cast<std::int64_t>(idx[v]));
      } else {
        w.c.push_back(static_cast<int>(idx[v]) + 1);
      }
    }
    doe.points.push_back(std::move(w));
    // odometer, last variable fastest
    for (std::size_t v = n_vars; v-- > 0;) {
      if (++idx[v] < sizes[v]) break;
      idx[v] = 0;
    }
  }
  return doe;
}

}  // namespace mixedgp
