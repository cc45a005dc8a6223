#pragma once

// Residuals and their Jacobian for the drawstring + multi-plane measurement
// model. AMPC and both baselines assemble their systems through this file.

#include "mpcal/kernels.hpp"
#include "mpcal/kinematics.hpp"
#include "mpcal/measurement.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mpcal {

inline constexpr int kAnchorOffset = kParamCount;   // anchor columns start here
inline constexpr int kSystemColumns = kParamCount + 3;

/// Distance from the tool point to the drawstring anchor. Throws
/// DegenerateGeometry when the two coincide.
double predicted_length(const RobotModel& model, const Vector3& anchor, const JointVector& joints);

/// Signed plane offset of the tool point minus the dial reading (the reading
/// is dropped when mode == Ignore).
double plane_residual(const RobotModel& model, const PlaneEstimate& plane, const JointVector& joints,
                      double dial_reading, DialMode mode = DialMode::Correction);

inline double plane_residual_at(const Vector3& position, const PlaneEstimate& plane, double dial_reading,
                                DialMode mode) {
  return plane.normal.dot(position - plane.point) - (mode == DialMode::Correction ? dial_reading : 0.0);
}

/**
 * Stacked residuals, length rows first then plane rows grouped by plane.
 *
 *   length row:  predicted - measured cable length
 *   plane row:   n^T (p - W) - dial
 *
 * `jacobian` holds d(residual)/d(u, anchor), 27 columns.
 */
struct ResidualSystem {
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
  int length_rows = 0;
  std::vector<int> row_group;                 // group index of every row
  std::vector<std::vector<Vector3>> positions;  // tool points per group, per sample
  std::vector<std::vector<double>> plane_values;  // plane residual per group, per sample
  std::vector<std::vector<PositionJacobian>> tool_jacobians;  // dp/du per group, per sample

  int rows() const { return static_cast<int>(residual.size()); }
};

ResidualSystem build_residual_system(const RobotModel& model, const Vector3& anchor,
                                     std::span<const PlaneEstimate> planes, const SampleGroups& groups,
                                     DialMode mode = DialMode::Correction,
                                     Execution exec = Execution::Parallel);

/// Recomputes the plane rows for new plane estimates without relinearizing.
void update_plane_rows(ResidualSystem& sys, std::span<const PlaneEstimate> planes, const SampleGroups& groups,
                       DialMode mode = DialMode::Correction);

/// Column indices of the solver unknowns: masked parameters, then the anchor.
std::vector<int> unknown_columns(const ParameterMask& mask);

/// Scatters a solved step (ordered as unknown_columns) into (u, anchor) deltas.
void scatter_step(const Eigen::VectorXd& step, const ParameterMask& mask, ParameterVector& du, Vector3& danchor);

/// Tool points per group under `model`.
std::vector<std::vector<Vector3>> group_positions(const RobotModel& model, const SampleGroups& groups,
                                                  Execution exec = Execution::Parallel);

/**
 * Anchor from cable lengths: linear least-squares start, then Gauss-Newton.
 *
 * When the points are close to a single plane the lengths cannot tell the
 * two mirror images apart; the start is then placed on the side of `hint`
 * (the robot base by default).
 */
Vector3 trilaterate(std::span<const Vector3> points, std::span<const double> lengths, int iterations = 20,
                    const Vector3& hint = Vector3::Zero());

}  // namespace mpcal
