#include "mpcal/residual_system.hpp"

#include "mpcal/errors.hpp"

#include <cmath>

namespace mpcal {

namespace {

constexpr double kCoincident = 1e-9;

std::vector<JointVector> joints_of(const SampleGroup& g) {
  std::vector<JointVector> q;
  q.reserve(g.size());
  for (const auto& s : g.samples) q.push_back(s.joints);
  return q;
}

}  // namespace

double predicted_length(const RobotModel& model, const Vector3& anchor, const JointVector& joints) {
  const double len = (tool_position(model, joints) - anchor).norm();
  if (!(len > kCoincident)) throw DegenerateGeometry("anchor coincides with the tool point");
  return len;
}

double plane_residual(const RobotModel& model, const PlaneEstimate& plane, const JointVector& joints,
                      double dial_reading, DialMode mode) {
  return plane_residual_at(tool_position(model, joints), plane, dial_reading, mode);
}

ResidualSystem build_residual_system(const RobotModel& model, const Vector3& anchor,
                                     std::span<const PlaneEstimate> planes, const SampleGroups& groups,
                                     DialMode mode, Execution exec) {
  if (planes.size() != groups.size()) throw InvalidArgument("one plane estimate per sample group required");
  const int total = static_cast<int>(total_samples(groups));

  ResidualSystem sys;
  sys.residual.resize(2 * total);
  sys.jacobian = Eigen::MatrixXd::Zero(2 * total, kSystemColumns);
  sys.length_rows = total;
  sys.row_group.resize(static_cast<std::size_t>(2 * total));
  sys.positions.resize(groups.size());
  sys.plane_values.resize(groups.size());
  sys.tool_jacobians.resize(groups.size());

  int row = 0;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    const auto q = joints_of(groups[j]);
    const auto lin = linearize_batch(model, q, exec);
    const PlaneEstimate& plane = planes[j];
    auto& pos = sys.positions[j];
    auto& phi = sys.plane_values[j];
    pos.resize(lin.size());
    phi.resize(lin.size());
    sys.tool_jacobians[j].resize(lin.size());
    const int n = static_cast<int>(lin.size());
    for (int i = 0; i < n; ++i) {
      const MeasurementSample& s = groups[j].samples[static_cast<std::size_t>(i)];
      const Vector3& p = lin[i].position;
      const Vector3 diff = p - anchor;
      const double len = diff.norm();
      if (!(len > kCoincident)) throw DegenerateGeometry("anchor coincides with the tool point");
      const Vector3 e = diff / len;

      const int lr = row + i;
      sys.residual(lr) = len - s.cable_length;
      sys.jacobian.block<1, kParamCount>(lr, 0) = e.transpose() * lin[i].jacobian;
      sys.jacobian.block<1, 3>(lr, kAnchorOffset) = -e.transpose();
      sys.row_group[static_cast<std::size_t>(lr)] = static_cast<int>(j);

      const int pr = total + row + i;
      phi[i] = plane_residual_at(p, plane, s.dial_reading, mode);
      sys.residual(pr) = phi[i];
      sys.jacobian.block<1, kParamCount>(pr, 0) = plane.normal.transpose() * lin[i].jacobian;
      sys.row_group[static_cast<std::size_t>(pr)] = static_cast<int>(j);
      pos[i] = p;
      sys.tool_jacobians[j][static_cast<std::size_t>(i)] = lin[i].jacobian;
    }
    row += n;
  }
  return sys;
}

void update_plane_rows(ResidualSystem& sys, std::span<const PlaneEstimate> planes, const SampleGroups& groups,
                       DialMode mode) {
  if (planes.size() != groups.size() || sys.positions.size() != groups.size()) {
    throw InvalidArgument("update_plane_rows: group count mismatch");
  }
  int row = sys.length_rows;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    for (std::size_t i = 0; i < groups[j].size(); ++i, ++row) {
      const double phi = plane_residual_at(sys.positions[j][i], planes[j], groups[j].samples[i].dial_reading, mode);
      sys.plane_values[j][i] = phi;
      sys.residual(row) = phi;
      sys.jacobian.block<1, kParamCount>(row, 0) = planes[j].normal.transpose() * sys.tool_jacobians[j][i];
    }
  }
}

std::vector<int> unknown_columns(const ParameterMask& mask) {
  std::vector<int> cols = mask.indices();
  for (int k = 0; k < 3; ++k) cols.push_back(kAnchorOffset + k);
  return cols;
}

void scatter_step(const Eigen::VectorXd& step, const ParameterMask& mask, ParameterVector& du, Vector3& danchor) {
  const auto cols = unknown_columns(mask);
  if (step.size() != static_cast<Eigen::Index>(cols.size())) throw InvalidArgument("step size mismatch");
  du = ParameterVector::zero();
  for (std::size_t c = 0; c + 3 < cols.size(); ++c) du[cols[c]] = step(static_cast<Eigen::Index>(c));
  danchor = step.tail<3>();
}

std::vector<std::vector<Vector3>> group_positions(const RobotModel& model, const SampleGroups& groups,
                                                  Execution exec) {
  std::vector<std::vector<Vector3>> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(positions_batch(model, joints_of(g), exec));
  return out;
}

Vector3 trilaterate(std::span<const Vector3> points, std::span<const double> lengths, int iterations,
                    const Vector3& hint) {
  const std::size_t n = points.size();
  if (n < 4 || lengths.size() != n) throw InvalidArgument("trilaterate needs >= 4 points with lengths");

  Vector3 centroid = Vector3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(n);
  Matrix3 scatter = Matrix3::Zero();
  for (const auto& p : points) scatter.noalias() += (p - centroid) * (p - centroid).transpose();
  const Eigen::SelfAdjointEigenSolver<Matrix3> pca(scatter);
  const double thin = std::sqrt(std::max(pca.eigenvalues()(0), 0.0));
  const double mid = std::sqrt(std::max(pca.eigenvalues()(1), 0.0));
  if (!(mid > 0.0)) throw DegenerateGeometry("trilateration: collinear point set");

  // |p_i|^2 - 2 p_i.x + |x|^2 = L_i^2; differencing against the mean removes |x|^2.
  double mean_c = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_c += points[i].squaredNorm() - lengths[i] * lengths[i];
  mean_c /= static_cast<double>(n);
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a.row(static_cast<Eigen::Index>(i)) = 2.0 * (points[i] - centroid).transpose();
    b(static_cast<Eigen::Index>(i)) = points[i].squaredNorm() - lengths[i] * lengths[i] - mean_c;
  }

  Vector3 x;
  if (thin < 0.1 * mid) {
    const Vector3 normal = pca.eigenvectors().col(0);
    const Eigen::Matrix<double, Eigen::Dynamic, 2> basis_rows = a * pca.eigenvectors().rightCols<2>();
    const Eigen::Vector2d in_plane = basis_rows.colPivHouseholderQr().solve(b);
    // a x = b only constrains the in-plane part of x; its normal part is the plane offset.
    const Vector3 foot = pca.eigenvectors().rightCols<2>() * in_plane + normal * normal.dot(centroid);
    double h2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) h2 += lengths[i] * lengths[i] - (foot - points[i]).squaredNorm();
    const double h = std::sqrt(std::max(h2 / static_cast<double>(n), 0.0));
    const double side = normal.dot(hint - foot) >= 0.0 ? 1.0 : -1.0;
    x = foot + side * h * normal;
  } else {
    x = a.colPivHouseholderQr().solve(b);
  }
  if (!x.allFinite()) throw DegenerateGeometry("trilateration: degenerate point set");

  for (int it = 0; it < iterations; ++it) {
    Eigen::MatrixXd j(n, 3);
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vector3 d = x - points[i];
      const double len = d.norm();
      if (!(len > kCoincident)) throw DegenerateGeometry("trilateration: anchor on a data point");
      j.row(static_cast<Eigen::Index>(i)) = (d / len).transpose();
      r(static_cast<Eigen::Index>(i)) = len - lengths[i];
    }
    const Vector3 dx = j.colPivHouseholderQr().solve(-r);
    x += dx;
    if (dx.norm() < 1e-13 * (1.0 + x.norm())) break;
  }
  return x;
}

}  // namespace mpcal
