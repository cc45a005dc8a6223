#pragma once

/**
 * @file kinematics.hpp
 * @brief Standard Denavit-Hartenberg forward kinematics and the position
 *        Jacobian with respect to all 24 kinematic parameters of a 6-joint arm.
 *
 * Link transform convention:
 *   T_i = Rot_z(theta_offset_i + q_i) * Trans_z(d_i) * Trans_x(a_i) * Rot_x(alpha_i)
 *
 * Angles are radians internally; degrees appear only at file/table boundaries.
 */

#include <Eigen/Dense>

#include <array>
#include <bitset>
#include <span>
#include <string>
#include <vector>

namespace mpcal {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

inline constexpr int kJointCount = 6;
inline constexpr int kParamCount = 24;

using JointVector = Eigen::Matrix<double, kJointCount, 1>;
using PositionJacobian = Eigen::Matrix<double, 3, kParamCount>;
using JointJacobian = Eigen::Matrix<double, 3, kJointCount>;

double deg_to_rad(double deg);
double rad_to_deg(double rad);

/// Wraps an angle into (-pi, pi].
double normalize_angle(double rad);

struct DhLink {
  double alpha = 0.0;         // rad
  double a = 0.0;             // mm
  double d = 0.0;             // mm
  double theta_offset = 0.0;  // rad

  DhLink() = default;
  /// Throws InvalidArgument on non-finite input; wraps both angles.
  DhLink(double alpha_rad, double a_mm, double d_mm, double theta_offset_rad);

  static DhLink from_degrees(double alpha_deg, double a_mm, double d_mm, double theta_deg);

  bool operator==(const DhLink&) const = default;
};

/// The four D-H parameter kinds, in the fixed project-wide block order.
enum class ParamKind { Alpha = 0, A = 1, D = 2, Theta = 3 };

/// Index of (kind, joint) in the 24-vector; joint is 0-based.
constexpr int param_index(ParamKind kind, int joint) {
  return static_cast<int>(kind) * kJointCount + joint;
}

/// Human-readable name such as "alpha3" or "d1" (1-based joint).
std::string param_name(int index);

constexpr bool is_angle_param(int index) {
  return index < kJointCount || index >= 3 * kJointCount;
}

/**
 * Kinematic parameter deltas in block order (dAlpha, dA, dD, dTheta), six
 * joints per block. Angle deltas are radians, length deltas mm.
 */
class ParameterVector {
 public:
  using Storage = Eigen::Matrix<double, kParamCount, 1>;

  ParameterVector() : values_(Storage::Zero()) {}
  explicit ParameterVector(const Storage& values) : values_(values) {}

  static ParameterVector zero() { return {}; }

  double operator[](int i) const { return values_(i); }
  double& operator[](int i) { return values_(i); }
  double operator()(ParamKind kind, int joint) const { return values_(param_index(kind, joint)); }
  double& operator()(ParamKind kind, int joint) { return values_(param_index(kind, joint)); }

  const Storage& values() const { return values_; }
  Storage& values() { return values_; }

  ParameterVector operator+(const ParameterVector& o) const { return ParameterVector(values_ + o.values_); }
  ParameterVector operator-(const ParameterVector& o) const { return ParameterVector(values_ - o.values_); }
  bool operator==(const ParameterVector& o) const { return values_ == o.values_; }

 private:
  Storage values_;
};

/**
 * Selects which of the 24 parameters take part in a computation.
 *
 * With position-only measurements the standard D-H chain of the default arm
 * carries exact column dependencies: alpha6 has no effect on the tool point,
 * theta6 only acts through a6 (nominally 0), d2 and d3 move along parallel
 * axes, a5 is proportional to theta5 and d5 to alpha5 through d6. The
 * calibration problem additionally has the base gauge (d1, theta1), which the
 * free anchor and free planes absorb.
 */
class ParameterMask {
 public:
  ParameterMask() { bits_.set(); }
  explicit ParameterMask(std::bitset<kParamCount> bits) : bits_(bits) {}

  static ParameterMask all() { return {}; }
  /// All parameters minus the structurally dependent columns (19 remain).
  static ParameterMask observable();
  /// observable() minus the base gauge d1, theta1 (17 remain).
  static ParameterMask calibratable();

  bool test(int i) const { return bits_.test(static_cast<std::size_t>(i)); }
  void set(int i, bool on = true) { bits_.set(static_cast<std::size_t>(i), on); }
  int count() const { return static_cast<int>(bits_.count()); }
  std::vector<int> indices() const;
  const std::bitset<kParamCount>& bits() const { return bits_; }

  /// Zeroes the entries that are masked out.
  ParameterVector apply(const ParameterVector& p) const;

  bool operator==(const ParameterMask&) const = default;

 private:
  std::bitset<kParamCount> bits_;
};

class RobotModel {
 public:
  /// Throws InvalidArgument unless exactly six links are given.
  explicit RobotModel(std::span<const DhLink> links);
  RobotModel(std::initializer_list<DhLink> links);

  /// Default arm: alpha/deg, a/mm, d/mm, theta/deg
  ///   1: -90  250   653.5    0
  ///   2:   0  900     0    -90
  ///   3:  90 -205     0    180
  ///   4: -90    0  1030.2    0
  ///   5:  90    0     0     90
  ///   6:   0    0   200.6    0
  static RobotModel nominal();

  /// Six links of all-zero parameters.
  static RobotModel zero();

  const DhLink& link(int i) const { return links_[static_cast<std::size_t>(i)]; }
  const std::array<DhLink, kJointCount>& links() const { return links_; }

  /// Returns a model with every parameter shifted by delta.
  RobotModel applied(const ParameterVector& delta) const;
  /// Inverse of applied().
  RobotModel subtracted(const ParameterVector& delta) const;
  /// Parameter-wise difference this - other (angles wrapped).
  ParameterVector difference(const RobotModel& other) const;

  bool operator==(const RobotModel&) const = default;

 private:
  std::array<DhLink, kJointCount> links_;
};

struct HomogeneousTransform {
  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static HomogeneousTransform identity() { return {}; }

  HomogeneousTransform operator*(const HomogeneousTransform& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  HomogeneousTransform inverse() const {
    Matrix3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }
  Vector3 apply(const Vector3& p) const { return rotation * p + translation; }
  Eigen::Matrix4d matrix() const;
};

/// Position error is what the measurement models consume; the rotation block
/// is carried for completeness only.
struct PoseError {
  Vector3 position = Vector3::Zero();
  Matrix3 rotation = Matrix3::Zero();
};

enum class JacobianMethod { Analytic, FiniteDifference };

HomogeneousTransform link_transform(const DhLink& link, double commanded_angle);

HomogeneousTransform forward_kinematics(const RobotModel& model, const JointVector& joints);
/// Checked variant for runtime-sized input; throws InvalidArgument on a wrong
/// joint count or non-finite angles.
HomogeneousTransform forward_kinematics(const RobotModel& model, std::span<const double> joints);

/// Convenience: translation block of forward_kinematics.
Vector3 tool_position(const RobotModel& model, const JointVector& joints);

PoseError pose_error(const RobotModel& nominal, const RobotModel& perturbed, const JointVector& joints);

PositionJacobian position_jacobian(const RobotModel& model, const JointVector& joints,
                                   JacobianMethod method = JacobianMethod::Analytic);

/// Central differences, `step` in each parameter's natural unit (rad or mm).
PositionJacobian finite_difference_jacobian(const RobotModel& model, const JointVector& joints,
                                            double step = 1e-6);

/// dp/dq; identical to the theta-offset block of the parameter Jacobian.
JointJacobian joint_jacobian(const RobotModel& model, const JointVector& joints);

/// Tool position and parameter Jacobian from a single pass over the chain.
struct Linearization {
  Vector3 position;
  PositionJacobian jacobian;
};
Linearization linearize(const RobotModel& model, const JointVector& joints);

JointVector joints_from_degrees(std::span<const double> deg);

}  // namespace mpcal
