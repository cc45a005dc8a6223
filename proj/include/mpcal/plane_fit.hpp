#pragma once

#include "mpcal/measurement.hpp"

#include <span>
#include <utility>

namespace mpcal {

/// Total-least-squares plane: centroid plus the direction of least spread.
/// The normal's largest-magnitude component is made positive. Throws
/// InvalidArgument for fewer than 3 points and DegenerateGeometry when the
/// points are (nearly) collinear.
PlaneEstimate fit_plane(std::span<const Vector3> points);

/// Two orthonormal in-plane directions completing `normal` to a right-handed frame.
std::pair<Vector3, Vector3> plane_basis(const Vector3& normal);

}  // namespace mpcal
