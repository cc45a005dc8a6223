#pragma once

// Conventional identifiers on the same residual system as AMPC. Planes are
// not unknowns here: they are refitted to the current predicted contact
// points at the start of every outer iteration. Since the refitted planes
// follow u, the plane rows of the step Jacobian are by default projected off
// the plane-motion directions (variable projection, Kaufman's form); without
// it the step treats the planes as fixed.

#include "mpcal/calibration.hpp"
#include "mpcal/kernels.hpp"
#include "mpcal/residual_system.hpp"

namespace mpcal {

struct LmConfig {
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 10.0;
  double max_damping = 1e12;
  int max_iterations = 50;
  double relative_tol = 1e-10;  // on relative cost decrease
  double plane_weight = 1.0;
  bool project_planes = true;
  DialMode dial_mode = DialMode::Correction;
  ParameterMask mask = ParameterMask::calibratable();
  Vector3 anchor_hint = Vector3::Zero();
  Execution exec = Execution::Parallel;
};

struct LsConfig {
  double ridge = 1e-10;
  int max_iterations = 50;
  double relative_tol = 1e-10;
  int divergence_limit = 3;  // consecutive cost increases before giving up
  double plane_weight = 1.0;
  bool project_planes = true;
  DialMode dial_mode = DialMode::Correction;
  ParameterMask mask = ParameterMask::calibratable();
  Vector3 anchor_hint = Vector3::Zero();
  Execution exec = Execution::Parallel;
};

/// Weighted cost sum w r^2 (length rows weight 1, plane rows `plane_weight`).
double weighted_cost(const ResidualSystem& sys, double plane_weight);

struct StepOptions {
  double plane_weight = 1.0;
  double damping = 0.0;
  bool marquardt = false;  // damping scaled by diag(A^T W A) instead of a ridge on I
  bool project_planes = true;
  Execution exec = Execution::Parallel;
};

/// Solves (A^T W A + damping) dx = -A^T W r over the unknown columns. With
/// project_planes, the plane rows of A are first made orthogonal to the
/// offset and tilt directions of `planes`.
Eigen::VectorXd gauss_newton_step(const ResidualSystem& sys, std::span<const PlaneEstimate> planes,
                                  const ParameterMask& mask, const StepOptions& opts);

/// Planes through the dial-corrected contact points p_i - dial_i * n_prev.
std::vector<PlaneEstimate> refit_planes(const std::vector<std::vector<Vector3>>& positions,
                                        const SampleGroups& groups, std::span<const PlaneEstimate> previous,
                                        DialMode mode);

CalibrationResult calibrate_lm(const SampleGroups& groups, const RobotModel& initial_model,
                               const LmConfig& cfg = {});

CalibrationResult calibrate_ls(const SampleGroups& groups, const RobotModel& initial_model,
                               const LsConfig& cfg = {});

}  // namespace mpcal
