#include "mpcal/kinematics.hpp"

#include "mpcal/errors.hpp"

#include <cmath>
#include <numbers>

namespace mpcal {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw InvalidArgument(std::string("non-finite ") + what);
  }
}

// Frames along the chain for one joint configuration. frames[0] is the base,
// frames[i] the frame after link i.
std::array<HomogeneousTransform, kJointCount + 1> chain_frames(const RobotModel& model,
                                                               const JointVector& joints) {
  std::array<HomogeneousTransform, kJointCount + 1> frames;
  for (int i = 0; i < kJointCount; ++i) {
    frames[i + 1] = frames[i] * link_transform(model.link(i), joints(i));
  }
  return frames;
}

}  // namespace

double deg_to_rad(double deg) { return deg * (std::numbers::pi / 180.0); }
double rad_to_deg(double rad) { return rad * (180.0 / std::numbers::pi); }

double normalize_angle(double rad) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (rad > -std::numbers::pi && rad <= std::numbers::pi) return rad;
  double r = std::remainder(rad, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

DhLink::DhLink(double alpha_rad, double a_mm, double d_mm, double theta_offset_rad) {
  require_finite(alpha_rad, "alpha");
  require_finite(a_mm, "a");
  require_finite(d_mm, "d");
  require_finite(theta_offset_rad, "theta offset");
  alpha = normalize_angle(alpha_rad);
  a = a_mm;
  d = d_mm;
  theta_offset = normalize_angle(theta_offset_rad);
}

DhLink DhLink::from_degrees(double alpha_deg, double a_mm, double d_mm, double theta_deg) {
  return DhLink(deg_to_rad(alpha_deg), a_mm, d_mm, deg_to_rad(theta_deg));
}

std::string param_name(int index) {
  static constexpr std::array<const char*, 4> kinds = {"alpha", "a", "d", "theta"};
  if (index < 0 || index >= kParamCount) throw InvalidArgument("parameter index out of range");
  return std::string(kinds[static_cast<std::size_t>(index / kJointCount)]) +
         std::to_string(index % kJointCount + 1);
}

ParameterMask ParameterMask::observable() {
  ParameterMask m;
  m.set(param_index(ParamKind::Alpha, 5), false);
  m.set(param_index(ParamKind::Theta, 5), false);
  m.set(param_index(ParamKind::D, 2), false);
  m.set(param_index(ParamKind::A, 4), false);
  m.set(param_index(ParamKind::D, 4), false);
  return m;
}

ParameterMask ParameterMask::calibratable() {
  ParameterMask m = observable();
  m.set(param_index(ParamKind::D, 0), false);
  m.set(param_index(ParamKind::Theta, 0), false);
  return m;
}

std::vector<int> ParameterMask::indices() const {
  std::vector<int> out;
  for (int i = 0; i < kParamCount; ++i) {
    if (test(i)) out.push_back(i);
  }
  return out;
}

ParameterVector ParameterMask::apply(const ParameterVector& p) const {
  ParameterVector out = p;
  for (int i = 0; i < kParamCount; ++i) {
    if (!test(i)) out[i] = 0.0;
  }
  return out;
}

RobotModel::RobotModel(std::span<const DhLink> links) {
  if (links.size() != static_cast<std::size_t>(kJointCount)) {
    throw InvalidArgument("robot model needs exactly 6 links, got " + std::to_string(links.size()));
  }
  std::copy(links.begin(), links.end(), links_.begin());
}

RobotModel::RobotModel(std::initializer_list<DhLink> links)
    : RobotModel(std::span<const DhLink>(links.begin(), links.size())) {}

RobotModel RobotModel::nominal() {
  return RobotModel{
      DhLink::from_degrees(-90.0, 250.0, 653.5, 0.0),
      DhLink::from_degrees(0.0, 900.0, 0.0, -90.0),
      DhLink::from_degrees(90.0, -205.0, 0.0, 180.0),
      DhLink::from_degrees(-90.0, 0.0, 1030.2, 0.0),
      DhLink::from_degrees(90.0, 0.0, 0.0, 90.0),
      DhLink::from_degrees(0.0, 0.0, 200.6, 0.0),
  };
}

RobotModel RobotModel::zero() {
  std::array<DhLink, kJointCount> links{};
  return RobotModel(links);
}

RobotModel RobotModel::applied(const ParameterVector& delta) const {
  std::array<DhLink, kJointCount> out;
  for (int i = 0; i < kJointCount; ++i) {
    const DhLink& l = link(i);
    out[static_cast<std::size_t>(i)] =
        DhLink(l.alpha + delta(ParamKind::Alpha, i), l.a + delta(ParamKind::A, i),
               l.d + delta(ParamKind::D, i), l.theta_offset + delta(ParamKind::Theta, i));
  }
  return RobotModel(out);
}

RobotModel RobotModel::subtracted(const ParameterVector& delta) const {
  return applied(ParameterVector(-delta.values()));
}

ParameterVector RobotModel::difference(const RobotModel& other) const {
  ParameterVector out;
  for (int i = 0; i < kJointCount; ++i) {
    const DhLink& l = link(i);
    const DhLink& r = other.link(i);
    out(ParamKind::Alpha, i) = normalize_angle(l.alpha - r.alpha);
    out(ParamKind::A, i) = l.a - r.a;
    out(ParamKind::D, i) = l.d - r.d;
    out(ParamKind::Theta, i) = normalize_angle(l.theta_offset - r.theta_offset);
  }
  return out;
}

Eigen::Matrix4d HomogeneousTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

HomogeneousTransform link_transform(const DhLink& link, double commanded_angle) {
  require_finite(commanded_angle, "joint angle");
  const double theta = link.theta_offset + commanded_angle;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(link.alpha), sa = std::sin(link.alpha);
  HomogeneousTransform t;
  t.rotation << ct, -st * ca, st * sa,
                st, ct * ca, -ct * sa,
                0.0, sa, ca;
  t.translation << link.a * ct, link.a * st, link.d;
  return t;
}

HomogeneousTransform forward_kinematics(const RobotModel& model, const JointVector& joints) {
  HomogeneousTransform t;
  for (int i = 0; i < kJointCount; ++i) {
    t = t * link_transform(model.link(i), joints(i));
  }
  return t;
}

HomogeneousTransform forward_kinematics(const RobotModel& model, std::span<const double> joints) {
  if (joints.size() != static_cast<std::size_t>(kJointCount)) {
    throw InvalidArgument("expected 6 joint angles, got " + std::to_string(joints.size()));
  }
  JointVector q;
  for (int i = 0; i < kJointCount; ++i) {
    require_finite(joints[static_cast<std::size_t>(i)], "joint angle");
    q(i) = joints[static_cast<std::size_t>(i)];
  }
  return forward_kinematics(model, q);
}

Vector3 tool_position(const RobotModel& model, const JointVector& joints) {
  return forward_kinematics(model, joints).translation;
}

PoseError pose_error(const RobotModel& nominal, const RobotModel& perturbed, const JointVector& joints) {
  const HomogeneousTransform tn = forward_kinematics(nominal, joints);
  const HomogeneousTransform tp = forward_kinematics(perturbed, joints);
  return {tp.translation - tn.translation, tp.rotation - tn.rotation};
}

Linearization linearize(const RobotModel& model, const JointVector& joints) {
  const auto frames = chain_frames(model, joints);
  const Vector3 p = frames[kJointCount].translation;
  Linearization out{p, PositionJacobian::Zero()};
  for (int i = 0; i < kJointCount; ++i) {
    const HomogeneousTransform& before = frames[static_cast<std::size_t>(i)];
    const HomogeneousTransform& after = frames[static_cast<std::size_t>(i) + 1];
    const Vector3 z_prev = before.rotation.col(2);
    const Vector3 x_cur = after.rotation.col(0);
    out.jacobian.col(param_index(ParamKind::Theta, i)) = z_prev.cross(p - before.translation);
    out.jacobian.col(param_index(ParamKind::D, i)) = z_prev;
    out.jacobian.col(param_index(ParamKind::A, i)) = x_cur;
    out.jacobian.col(param_index(ParamKind::Alpha, i)) = x_cur.cross(p - after.translation);
  }
  return out;
}

PositionJacobian finite_difference_jacobian(const RobotModel& model, const JointVector& joints,
                                            double step) {
  PositionJacobian jac;
  for (int k = 0; k < kParamCount; ++k) {
    ParameterVector delta;
    delta[k] = step;
    const Vector3 plus = tool_position(model.applied(delta), joints);
    delta[k] = -step;
    const Vector3 minus = tool_position(model.applied(delta), joints);
    jac.col(k) = (plus - minus) / (2.0 * step);
  }
  return jac;
}

PositionJacobian position_jacobian(const RobotModel& model, const JointVector& joints,
                                   JacobianMethod method) {
  if (method == JacobianMethod::FiniteDifference) {
    return finite_difference_jacobian(model, joints);
  }
  return linearize(model, joints).jacobian;
}

JointJacobian joint_jacobian(const RobotModel& model, const JointVector& joints) {
  return position_jacobian(model, joints).block<3, kJointCount>(0, 3 * kJointCount);
}

JointVector joints_from_degrees(std::span<const double> deg) {
  if (deg.size() != static_cast<std::size_t>(kJointCount)) {
    throw InvalidArgument("expected 6 joint angles, got " + std::to_string(deg.size()));
  }
  JointVector q;
  for (int i = 0; i < kJointCount; ++i) {
    require_finite(deg[static_cast<std::size_t>(i)], "joint angle");
    q(i) = deg_to_rad(deg[static_cast<std::size_t>(i)]);
  }
  return q;
}

}  // namespace mpcal
