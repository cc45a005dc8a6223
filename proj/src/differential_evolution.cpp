#include "mpcal/differential_evolution.hpp"

#include "mpcal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mpcal {

namespace {

double sanitize(double v) {
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

}  // namespace

void DeConfig::validate() const {
  if (!(differential_weight > 0.0 && differential_weight <= 2.0)) {
    throw InvalidArgument("DE differential weight F must lie in (0, 2]");
  }
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) {
    throw InvalidArgument("DE crossover rate CR must lie in [0, 1]");
  }
  if (population_size < 4) throw InvalidArgument("DE population size must be >= 4");
  if (max_generations < 0) throw InvalidArgument("DE generation count must be >= 0");
  if (stall_generations < 0) throw InvalidArgument("DE stall window must be >= 0");
}

DeResult de_optimize(const Objective& objective, std::span<const Bound> bounds, const DeConfig& cfg,
                     Execution exec) {
  cfg.validate();
  const int dim = static_cast<int>(bounds.size());
  if (dim == 0) throw InvalidArgument("DE needs at least one dimension");
  for (const Bound& b : bounds) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
      throw InvalidArgument("DE bounds must be finite with lo < hi");
    }
  }

  const int np = cfg.population_size;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_member(0, np - 1);
  std::uniform_int_distribution<int> pick_dim(0, dim - 1);

  std::vector<Eigen::VectorXd> pop(static_cast<std::size_t>(np), Eigen::VectorXd(dim));
  for (auto& x : pop) {
    for (int d = 0; d < dim; ++d) x(d) = bounds[d].lo + unit(rng) * (bounds[d].hi - bounds[d].lo);
  }
  auto evaluate = [&](const std::vector<Eigen::VectorXd>& xs) {
    auto vals = evaluate_indexed(static_cast<int>(xs.size()),
                                 [&](int i) { return objective(xs[static_cast<std::size_t>(i)]); }, exec);
    for (double& v : vals) v = sanitize(v);
    return vals;
  };
  std::vector<double> fit = evaluate(pop);

  DeResult res;
  auto best_it = std::max_element(fit.begin(), fit.end());
  res.best = pop[static_cast<std::size_t>(best_it - fit.begin())];
  res.best_value = *best_it;
  res.history.push_back(res.best_value);

  int stall = 0;
  std::vector<Eigen::VectorXd> trials(static_cast<std::size_t>(np), Eigen::VectorXd(dim));
  for (int gen = 0; gen < cfg.max_generations; ++gen) {
    for (int i = 0; i < np; ++i) {
      int r1, r2, r3;
      do { r1 = pick_member(rng); } while (r1 == i);
      do { r2 = pick_member(rng); } while (r2 == i || r2 == r1);
      do { r3 = pick_member(rng); } while (r3 == i || r3 == r1 || r3 == r2);
      const int forced = pick_dim(rng);
      Eigen::VectorXd& t = trials[static_cast<std::size_t>(i)];
      const Eigen::VectorXd& target = pop[static_cast<std::size_t>(i)];
      for (int d = 0; d < dim; ++d) {
        if (d == forced || unit(rng) < cfg.crossover_rate) {
          const double v = pop[r1](d) + cfg.differential_weight * (pop[r2](d) - pop[r3](d));
          t(d) = std::clamp(v, bounds[d].lo, bounds[d].hi);
        } else {
          t(d) = target(d);
        }
      }
    }
    const std::vector<double> trial_fit = evaluate(trials);

    bool improved = false;
    for (int i = 0; i < np; ++i) {
      if (trial_fit[i] >= fit[i]) {
        pop[i] = trials[i];
        fit[i] = trial_fit[i];
      }
      if (fit[i] > res.best_value) {
        res.best_value = fit[i];
        res.best = pop[i];
        improved = true;
      }
    }
    res.history.push_back(res.best_value);
    res.generations_used = gen + 1;
    stall = improved ? 0 : stall + 1;
    if (cfg.stall_generations > 0 && stall >= cfg.stall_generations) break;
  }
  res.final_population_values = fit;
  return res;
}

}  // namespace mpcal
