#pragma once

#include "mpcal/kinematics.hpp"
#include "mpcal/measurement.hpp"

#include <string>
#include <vector>

namespace mpcal {

/// Iterate of a multi-plane identification run.
struct CalibrationState {
  ParameterVector u;                  // deltas on top of the initial model
  Vector3 anchor = Vector3::Zero();   // drawstring anchor, base frame (mm)
  std::vector<PlaneEstimate> planes;  // one per sample group
  std::vector<double> multipliers;    // one per plane (zero for the baselines)
  int iteration = 0;
};

struct CalibrationResult {
  std::string method;
  CalibrationState state;
  RobotModel model = RobotModel::nominal();  // initial model with state.u applied
  std::vector<double> objective_trace;       // objective at the start of every iteration, then the final value
  std::vector<double> step_norms;            // |(du, danchor)| per iteration
  bool converged = false;
  int iterations_used = 0;
  double wall_time_s = 0.0;
};

/// Initial anchor and planes shared by every solver: planes fitted through
/// tool points of `model`, anchor trilaterated from the cable lengths.
CalibrationState initial_state(const SampleGroups& groups, const RobotModel& model,
                               const Vector3& anchor_hint = Vector3::Zero());

/// Throws InvalidArgument unless there is at least one group and every group
/// holds >= 3 samples.
void require_groups(const SampleGroups& groups);

}  // namespace mpcal
