#pragma once

// Measurement-configuration selection: pick the K-subset of a configuration
// pool whose stacked position Jacobian has the largest observability index.

#include "mpcal/differential_evolution.hpp"
#include "mpcal/kinematics.hpp"
#include "mpcal/observability.hpp"

#include <span>
#include <vector>

namespace mpcal {

struct McsOptions {
  DeConfig de;
  ParameterMask mask = ParameterMask::observable();
  double exponent = kDefaultIndexExponent;
  Execution exec = Execution::Parallel;
};

struct SelectionResult {
  std::vector<int> chosen_indices;  // sorted, unique, size K
  double index_value = 0.0;
  int generations_used = 0;
  std::vector<double> history;      // best-so-far per generation
  std::vector<double> final_population_values;
};

struct CurvePoint {
  int k = 0;
  double index_value = 0.0;
};

/// Maps K real genes to K distinct pool indices: floor, clamp into range, and
/// walk cyclically past indices already taken. Output sorted.
std::vector<int> decode_subset(std::span<const double> genes, int pool_size);

/// Inverse-mean index of a subset from precomputed per-configuration Gram blocks.
double subset_index(std::span<const Eigen::MatrixXd> grams, std::span<const int> subset,
                    double exponent = kDefaultIndexExponent);

/// Throws InvalidArgument for K == 0 or K > pool size.
SelectionResult select_configurations(const RobotModel& model, std::span<const JointVector> pool, int k,
                                      const McsOptions& opts = {});

/// Best index per K; K values must be ascending and each <= pool size.
std::vector<CurvePoint> observability_curve(const RobotModel& model, std::span<const JointVector> pool,
                                            std::span<const int> k_values, const McsOptions& opts = {});

}  // namespace mpcal
