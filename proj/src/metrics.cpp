#include "mpcal/metrics.hpp"

#include "mpcal/errors.hpp"
#include "mpcal/residual_system.hpp"

#include <algorithm>
#include <cmath>

namespace mpcal {

MetricSet compute_metrics(std::span<const double> errors) {
  if (errors.empty()) throw InvalidArgument("compute_metrics: empty error list");
  MetricSet m;
  m.n = errors.size();
  double sq = 0.0, abs_sum = 0.0;
  for (double e : errors) {
    if (!std::isfinite(e)) throw InvalidArgument("compute_metrics: non-finite error");
    sq += e * e;
    abs_sum += std::abs(e);
    m.max_abs = std::max(m.max_abs, std::abs(e));
  }
  const double n = static_cast<double>(m.n);
  m.rmse = std::sqrt(sq / n);
  m.mean_abs = abs_sum / n;
  if (m.n > 1) {
    double var = 0.0;
    for (double e : errors) var += (std::abs(e) - m.mean_abs) * (std::abs(e) - m.mean_abs);
    m.sample_std = std::sqrt(var / (n - 1.0));
  }
  // Rounding can leave mean_abs a few ulps above rmse when all |e| are equal.
  m.mean_abs = std::min(m.mean_abs, m.rmse);
  return m;
}

std::vector<double> position_error_per_sample(const RobotModel& model, const Vector3& anchor,
                                              std::span<const MeasurementSample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.cable_length - predicted_length(model, anchor, s.joints));
  return out;
}

std::vector<double> cartesian_error_per_sample(const RobotModel& model, const RobotModel& truth,
                                               std::span<const MeasurementSample> samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back((tool_position(model, s.joints) - tool_position(truth, s.joints)).norm());
  return out;
}

}  // namespace mpcal
