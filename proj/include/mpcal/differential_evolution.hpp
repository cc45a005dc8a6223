#pragma once

#include "mpcal/kernels.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace mpcal {

struct DeConfig {
  int population_size = 40;
  int max_generations = 300;
  double differential_weight = 0.5;  // F
  double crossover_rate = 0.9;       // CR
  std::uint64_t seed = 1;
  int stall_generations = 50;        // stop after this many generations without improvement; 0 disables

  /// Throws InvalidArgument unless 0 < F <= 2, 0 <= CR <= 1, population >= 4.
  void validate() const;
};

struct Bound {
  double lo;
  double hi;
};

struct DeResult {
  Eigen::VectorXd best;
  double best_value = 0.0;
  std::vector<double> history;  // best-so-far after initialization, then after each generation
  int generations_used = 0;
  std::vector<double> final_population_values;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/**
 * DE/rand/1/bin maximizer with clamping to the box.
 *
 * Trial vectors are generated serially from one seeded engine; only the
 * objective evaluations fan out, so the run is reproducible for a given seed
 * regardless of threading. A NaN objective value ranks as -infinity.
 */
DeResult de_optimize(const Objective& objective, std::span<const Bound> bounds, const DeConfig& cfg,
                     Execution exec = Execution::Parallel);

}  // namespace mpcal
