#pragma once

/**
 * @file ampc.hpp
 * @brief ADMM identification of kinematic parameter errors under
 *        multi-planar contact constraints.
 *
 * Unknowns: parameter deltas u, the drawstring anchor P0, one plane (W_j,
 * gamma_j) and one scalar multiplier Gamma_j per plane. The objective about
 * the current iterate t is
 *
 *   f = 1/(2M) sum (L - Lhat)^2 + 1/M sum Gamma_j Phi + 1/(2M) sum rho_j Phi^2
 *       + proximal terms lambda_j/2 |step|^2
 *
 * with Phi = gamma_j^T (p - W_j) - dial and M the total sample count. Each
 * outer iteration linearizes once at u_t and then updates, in order, every
 * W_j, every gamma_j, (u, P0) jointly, and every Gamma_j.
 *
 * The (u, P0) update minimizes the linearized objective jointly with a plane
 * step (normal offset and tilt) and applies both; holding the planes fixed
 * instead (PlaneCoupling::Fixed) lets the two blocks fight each other and
 * the iteration stalls far from the solution.
 */

#include "mpcal/calibration.hpp"
#include "mpcal/kernels.hpp"
#include "mpcal/measurement.hpp"
#include "mpcal/residual_system.hpp"

#include <span>
#include <vector>

namespace mpcal {

// At a fixed point the penalty acts as the weight of the plane rows relative
// to the length rows, so rho is best set to (cable sigma / plane sigma)^2;
// 25 matches the default simulator noise (0.05 mm cable, 0.01 mm dial).
struct PlaneWeights {
  double rho = 25.0;     // constraint penalty
  double lambda = 1e-6;  // proximal coefficient
  double eta = 1.0;      // multiplier learning rate
};

/// How the (u, P0) update treats the planes.
enum class PlaneCoupling {
  /// Minimize the linearized objective over (u, P0) and the plane steps
  /// together, keeping only the (u, P0) part (plane blocks eliminated).
  Eliminated,
  /// Planes held fixed during the (u, P0) update.
  Fixed,
};

struct AmpcConfig {
  std::vector<PlaneWeights> plane_weights;  // per plane; empty means `defaults` for every plane
  PlaneWeights defaults;
  int max_outer_iterations = 50;
  double convergence_tol = 1e-8;  // on |(du, dP0)|, mixed units
  DialMode dial_mode = DialMode::Correction;
  PlaneCoupling coupling = PlaneCoupling::Eliminated;
  // Redo an outer iteration with a larger proximal weight on every block
  // while it multiplies the penalized data cost by more than 10; the extra
  // weight decays by 10x per accepted iteration.
  bool safeguard = true;
  ParameterMask mask = ParameterMask::calibratable();
  Vector3 anchor_hint = Vector3::Zero();
  Execution exec = Execution::Parallel;

  PlaneWeights weights(int plane) const;
  /// Throws InvalidArgument on rho <= 0, lambda < 0, eta <= 0, a per-plane
  /// list whose size differs from n_planes, or n_planes < 1.
  void validate(int n_planes) const;
};

/// Tool points and dial readings of one plane at the current iterate.
struct PlaneSamples {
  std::vector<Vector3> positions;
  std::vector<double> dial;  // already zeroed when the dial is ignored
};

std::vector<PlaneSamples> plane_samples(const std::vector<std::vector<Vector3>>& positions,
                                        const SampleGroups& groups, DialMode mode);

/// Plane-point update; the 3x3 proximal system is solved directly.
Vector3 update_plane_point(const CalibrationState& state, const PlaneSamples& samples, const AmpcConfig& cfg,
                           int plane);

/// Plane-normal update, renormalized to unit length.
Vector3 update_plane_normal(const CalibrationState& state, const PlaneSamples& samples, const AmpcConfig& cfg,
                            int plane);

struct ParameterStep {
  ParameterVector u;
  Vector3 anchor;
  std::vector<PlaneEstimate> planes;  // moved with the step under Eliminated coupling, else unchanged
  double step_norm = 0.0;               // |(du, dP0)|
};

/// Joint (u, P0) update from the regularized normal equations, linearized at
/// `system` (built at the current u with the current planes).
ParameterStep update_parameters(const CalibrationState& state, const ResidualSystem& system,
                                const AmpcConfig& cfg);

/// Convenience overload that builds the residual system itself.
ParameterStep update_parameters(const CalibrationState& state, const SampleGroups& groups,
                                const RobotModel& initial_model, const AmpcConfig& cfg);

/// Gamma_j + eta_j rho_j / N_j * sum_i Phi_ij for every plane.
std::vector<double> update_multipliers(const CalibrationState& state, std::span<const PlaneSamples> samples,
                                       const AmpcConfig& cfg);

/// Objective at zero step (proximal terms vanish).
double augmented_lagrangian(const CalibrationState& state, const SampleGroups& groups,
                            const RobotModel& initial_model, const AmpcConfig& cfg);

/// Full run from u = 0, Gamma = 0 with fitted planes and trilaterated anchor.
CalibrationResult calibrate_ampc(const SampleGroups& groups, const RobotModel& initial_model,
                                 const AmpcConfig& cfg = {});

/// Same, starting from a caller-provided state.
CalibrationResult calibrate_ampc(const SampleGroups& groups, const RobotModel& initial_model,
                                 CalibrationState start, const AmpcConfig& cfg);

}  // namespace mpcal
