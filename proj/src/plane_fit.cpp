#include "mpcal/plane_fit.hpp"

#include "mpcal/errors.hpp"

#include <cmath>

namespace mpcal {

PlaneEstimate fit_plane(std::span<const Vector3> points) {
  if (points.size() < 3) throw InvalidArgument("fit_plane needs at least 3 points");
  Vector3 centroid = Vector3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());

  Matrix3 scatter = Matrix3::Zero();
  for (const auto& p : points) {
    const Vector3 d = p - centroid;
    scatter.noalias() += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Matrix3> eig(scatter);
  // Eigenvalues ascending: [0] is the normal direction, [1] the thinnest in-plane extent.
  const double count = static_cast<double>(points.size());
  const double second_spread = std::sqrt(std::max(eig.eigenvalues()(1), 0.0) / count);
  const double widest = std::sqrt(std::max(eig.eigenvalues()(2), 0.0) / count);
  // The relative bound covers eigensolver roundoff on long point sets.
  if (!(second_spread >= std::max(1e-9, 1e-7 * widest))) throw DegenerateGeometry("fit_plane: points are collinear");

  Vector3 n = eig.eigenvectors().col(0).normalized();
  Eigen::Index k;
  n.cwiseAbs().maxCoeff(&k);
  if (n(k) < 0.0) n = -n;
  return {centroid, n};
}

std::pair<Vector3, Vector3> plane_basis(const Vector3& normal) {
  const Vector3 n = normal.normalized();
  int axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  Vector3 u = Vector3::Unit(axis) - n(axis) * n;
  u.normalize();
  return {u, n.cross(u)};
}

}  // namespace mpcal
