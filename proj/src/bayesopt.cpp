#include "mixedgp/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mixedgp/local_search.hpp"

namespace mixedgp {

namespace {

constexpr double kDuplicateTol = 1e-8;  // in scaled coordinates
constexpr double kInvSqrt2Pi = 0.3989422804014327;

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
}

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); }
double normal_pdf(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

// One assignment of every integer and categorical variable.
struct DiscreteCombo {
  std::vector<std::int64_t> z;
  std::vector<int> c;
};

std::vector<double> scaled_coords(const DesignSpace& space, const MixedPoint& w) {
  std::vector<double> out;
  for (std::size_t i = 0; i < space.num_continuous(); ++i) {
    const auto& b = space.continuous_variable(i).as_continuous();
    out.push_back((w.x[i] - b.lower) / (b.upper - b.lower));
  }
  for (std::size_t i = 0; i < space.num_integer(); ++i) {
    const auto& b = space.integer_variable(i).as_integer();
    out.push_back(static_cast<double>(w.z[i] - b.lower) / static_cast<double>(b.upper - b.lower));
  }
  return out;
}

bool duplicates_doe(const DesignSpace& space, const Doe& doe, const MixedPoint& w) {
  const std::vector<double> ws = scaled_coords(space, w);
  for (const MixedPoint& p : doe.points) {
    if (p.c != w.c) continue;
    const std::vector<double> ps = scaled_coords(space, p);
    double dist = 0.0;
    for (std::size_t j = 0; j < ws.size(); ++j) dist = std::max(dist, std::abs(ws[j] - ps[j]));
    if (dist < kDuplicateTol) return true;
  }
  return false;
}

MixedPoint combo_point(const DesignSpace& space, const DiscreteCombo& combo,
                       const Eigen::VectorXd& x_unit) {
  MixedPoint w;
  for (std::size_t i = 0; i < space.num_continuous(); ++i) {
    const auto& b = space.continuous_variable(i).as_continuous();
    w.x.push_back(b.lower + x_unit[i] * (b.upper - b.lower));
  }
  w.z = combo.z;
  w.c = combo.c;
  return w;
}

}  // namespace

double expected_improvement(const TrainedGp& gp, const MixedPoint& w, double f_min) {
  const double mean = gp.predict_mean(w);
  const double variance = gp.predict_variance(w);
  const double sigma = std::sqrt(std::max(variance, 0.0));
  const double improvement = f_min - mean;
  if (sigma <= 0.0) return std::max(improvement, 0.0);
  const double u = improvement / sigma;
  const double ei = improvement * normal_cdf(u) + sigma * normal_pdf(u);
  return std::max(ei, 0.0);
}

Proposal propose_next(const TrainedGp& gp, double f_min, const AcquisitionSettings& settings,
                      std::uint64_t seed) {
  const DesignSpace& space = gp.space();
  const std::size_t n_cont = space.num_continuous();

  // Discrete part: enumerate when the combination count fits the cap,
  // otherwise sample cap combinations.
  long combo_count = 1;
  bool overflow = false;
  for (std::size_t i = 0; i < space.num_integer() && !overflow; ++i) {
    const auto& b = space.integer_variable(i).as_integer();
    const long span = static_cast<long>(b.upper - b.lower + 1);
    if (combo_count > settings.combo_cap / span) overflow = true;
    combo_count *= span;
  }
  for (std::size_t i = 0; i < space.num_categorical() && !overflow; ++i) {
    const long span = static_cast<long>(space.level_count(i));
    if (combo_count > settings.combo_cap / span) overflow = true;
    combo_count *= span;
  }

  std::vector<DiscreteCombo> combos;
  if (!overflow) {
    combos.resize(1);
    for (std::size_t i = 0; i < space.num_integer(); ++i) {
      const auto& b = space.integer_variable(i).as_integer();
      std::vector<DiscreteCombo> next;
      for (const DiscreteCombo& base : combos) {
        for (std::int64_t v = b.lower; v <= b.upper; ++v) {
          DiscreteCombo combo = base;
          combo.z.push_back(v);
          next.push_back(std::move(combo));
        }
      }
      combos = std::move(next);
    }
    for (std::size_t i = 0; i < space.num_categorical(); ++i) {
      const int levels = static_cast<int>(space.level_count(i));
      std::vector<DiscreteCombo> next;
      for (const DiscreteCombo& base : combos) {
        for (int l = 1; l <= levels; ++l) {
          DiscreteCombo combo = base;
          combo.c.push_back(l);
          next.push_back(std::move(combo));
        }
      }
      combos = std::move(next);
    }
  } else {
    auto rng = seeded_rng(seed, 0xC0FFEE);
    combos.resize(settings.combo_cap);
    for (auto& combo : combos) {
      for (std::size_t i = 0; i < space.num_integer(); ++i) {
        const auto& b = space.integer_variable(i).as_integer();
        std::uniform_int_distribution<std::int64_t> pick(b.lower, b.upper);
        combo.z.push_back(pick(rng));
      }
      for (std::size_t i = 0; i < space.num_categorical(); ++i) {
        std::uniform_int_distribution<int> pick(1, static_cast<int>(space.level_count(i)));
        combo.c.push_back(pick(rng));
      }
    }
  }

  struct Candidate {
    MixedPoint point;
    double ei = -1.0;
  };
  std::vector<Candidate> candidates;

  const long max_evals = settings.max_evals_per_start > 0
                             ? settings.max_evals_per_start
                             : std::max<long>(1, 150L * static_cast<long>(n_cont));

  for (std::size_t k = 0; k < combos.size(); ++k) {
    const DiscreteCombo& combo = combos[k];
    if (n_cont == 0) {
      MixedPoint w = combo_point(space, combo, Eigen::VectorXd());
      candidates.push_back(Candidate{w, expected_improvement(gp, w, f_min)});
      continue;
    }

    const auto neg_ei = [&](const Eigen::VectorXd& x_unit) {
      return -expected_improvement(gp, combo_point(space, combo, x_unit), f_min);
    };
    BoxBounds box{Eigen::VectorXd::Zero(n_cont), Eigen::VectorXd::Ones(n_cont)};

    // Keep every start's endpoint: when a maximizer coincides with a DoE
    // point, the runner-up endpoints supply the non-duplicate proposal.
    auto rng = seeded_rng(seed, k + 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int s = 0; s < settings.continuous_multistarts; ++s) {
      Eigen::VectorXd start(n_cont);
      const double frac = (s + 0.5) / settings.continuous_multistarts;
      for (std::size_t j = 0; j < n_cont; ++j) {
        start[j] = std::clamp(frac + 0.1 * (2.0 * unit(rng) - 1.0), 0.0, 1.0);
      }
      const SearchResult res = pattern_search_minimize(neg_ei, start, box, max_evals);
      candidates.push_back(Candidate{combo_point(space, combo, res.x), -res.value});
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.ei > b.ei; });

  const double ei_floor = 1e-14 * std::max(1.0, std::abs(f_min));
  for (const Candidate& cand : candidates) {
    if (cand.ei <= ei_floor) break;
    if (!duplicates_doe(space, gp.doe(), cand.point)) {
      return Proposal{cand.point, cand.ei, false};
    }
  }

  // Flat or fully duplicated acquisition: fall back to a seed-determined
  // exploratory point.
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Doe sample = lhs_sample(space, 1, seed ^ (0xE0E0E0E0ULL + attempt));
    if (!duplicates_doe(space, gp.doe(), sample.points[0])) {
      return Proposal{sample.points[0], 0.0, true};
    }
  }
  // Space exhausted (tiny fully-categorical spaces): return the best
  // candidate even if duplicated.
  return Proposal{candidates.front().point, candidates.front().ei, true};
}

EgoTrace ego_run(const std::function<double(const MixedPoint&)>& objective,
                 const DesignSpace& space, const EgoConfig& config) {
  if (config.budget < 0) throw std::invalid_argument("ego_run: budget must be >= 0");
  if (config.doe_size < 2) throw std::invalid_argument("ego_run: DoE size must be >= 2");

  EgoTrace trace;
  trace.best_value = std::numeric_limits<double>::infinity();

  Doe doe;  // successful evaluations only
  const auto record = [&](int iteration, const MixedPoint& w, double value, bool failed,
                          double fit_ll, bool degenerate) {
    EgoRecord rec;
    rec.iteration = iteration;
    rec.point = w;
    rec.failed = failed;
    rec.fit_log_likelihood = fit_ll;
    rec.degenerate_acquisition = degenerate;
    if (!failed) {
      rec.y = value;
      if (value < trace.best_value) {
        trace.best_value = value;
        trace.best_point = w;
      }
      doe.points.push_back(w);
      doe.y.push_back(value);
    } else {
      rec.y = std::numeric_limits<double>::quiet_NaN();
      ++trace.failures;
    }
    rec.best_so_far = trace.best_value;
    trace.records.push_back(std::move(rec));
  };

  const auto evaluate = [&](const MixedPoint& w) -> std::pair<double, bool> {
    try {
      const double value = objective(w);
      return {value, !std::isfinite(value)};
    } catch (...) {
      return {0.0, true};
    }
  };

  const Doe initial = lhs_sample(space, config.doe_size, config.seed);
  for (const MixedPoint& w : initial.points) {
    const auto [value, failed] = evaluate(w);
    record(0, w, value, failed, 0.0, false);
  }
  if (doe.size() < 2) {
    throw NumericalError("ego_run: fewer than 2 successful initial evaluations");
  }

  for (int iter = 1; iter <= config.budget; ++iter) {
    FitOptions fit_options = config.fit_options;
    fit_options.seed = config.seed ^ (0xB0B0ULL + static_cast<std::uint64_t>(iter));
    const FitResult fitted = fit(space, doe, config.kernel, fit_options);

    const Proposal proposal =
        propose_next(fitted.gp, trace.best_value, config.acquisition,
                     config.seed ^ (0xACE0ULL + static_cast<std::uint64_t>(iter)));
    const auto [value, failed] = evaluate(proposal.point);
    record(iter, proposal.point, value, failed, fitted.report.best_log_likelihood,
           proposal.degenerate);
  }
  return trace;
}

}  // namespace mixedgp
