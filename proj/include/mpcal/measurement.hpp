#pragma once

#include "mpcal/kinematics.hpp"

#include <vector>

namespace mpcal {

/// One row of a drawstring + plane-contact data set.
struct MeasurementSample {
  JointVector joints = JointVector::Zero();  // rad
  double cable_length = 0.0;                 // mm
  double dial_reading = 0.0;                 // mm
  int plane_id = 0;

  bool operator==(const MeasurementSample&) const = default;
};

/// Samples of one plane. `plane_id` matches every member's plane_id.
struct SampleGroup {
  int plane_id = 0;
  std::vector<MeasurementSample> samples;

  std::size_t size() const { return samples.size(); }
};

using SampleGroups = std::vector<SampleGroup>;

/// Groups by plane_id, ascending, preserving in-group order.
SampleGroups group_by_plane(const std::vector<MeasurementSample>& samples);
std::vector<MeasurementSample> flatten(const SampleGroups& groups);
std::size_t total_samples(const SampleGroups& groups);

/// A point on the plane and its unit normal.
struct PlaneEstimate {
  Vector3 point = Vector3::Zero();
  Vector3 normal = Vector3::UnitZ();
};

enum class DialMode { Correction, Ignore };

}  // namespace mpcal
