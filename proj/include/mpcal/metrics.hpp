#pragma once

#include "mpcal/kinematics.hpp"
#include "mpcal/measurement.hpp"

#include <span>
#include <vector>

namespace mpcal {

/// Summary of signed errors (mm). sample_std is the standard deviation of
/// the absolute errors, n - 1 in the denominator (0 for a single value).
struct MetricSet {
  double rmse = 0.0;
  double mean_abs = 0.0;
  double max_abs = 0.0;
  double sample_std = 0.0;
  std::size_t n = 0;
};

/// Throws InvalidArgument for an empty list.
MetricSet compute_metrics(std::span<const double> errors);

/// Recorded cable length minus the length predicted by (model, anchor).
std::vector<double> position_error_per_sample(const RobotModel& model, const Vector3& anchor,
                                              std::span<const MeasurementSample> samples);

/// |p_model - p_truth| per sample, available only when the true arm is known.
std::vector<double> cartesian_error_per_sample(const RobotModel& model, const RobotModel& truth,
                                               std::span<const MeasurementSample> samples);

}  // namespace mpcal
