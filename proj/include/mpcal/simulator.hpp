#pragma once

// Synthetic drawstring + plane-contact rig: a perturbed "true" arm touches
// each plane at random points (position IK, orientation free) and the
// recorded joints, cable lengths and dial readings are corrupted by noise.

#include "mpcal/kinematics.hpp"
#include "mpcal/measurement.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mpcal {

struct PlaneSpec {
  std::string name;
  Vector3 point = Vector3::Zero();   // anchor W, mm
  Vector3 normal = Vector3::UnitZ();  // unit

  PlaneEstimate estimate() const { return {point, normal}; }
};

/// Horizontal, 45-degree tilted and vertical planes in front of the default arm.
std::vector<PlaneSpec> default_planes();

struct NoiseSpec {
  double cable_sigma = 0.05;  // mm
  double dial_sigma = 0.01;   // mm
  double joint_sigma = 0.0;   // rad
  std::uint64_t seed = 1;

  void validate() const;
};

struct PerturbationCaps {
  double angle = deg_to_rad(1.0);  // rad, alpha and theta blocks
  double length = 2.0;             // mm, a and d blocks
  // Only these parameters are perturbed. The others either do not reach the
  // tool point or are indistinguishable from a combination of these.
  ParameterMask mask = ParameterMask::calibratable();
};

/// Uniform draw in [-cap, cap] per masked entry, zero elsewhere.
ParameterVector perturb_parameters(const PerturbationCaps& caps, std::mt19937_64& rng);

struct GroundTruth {
  ParameterVector perturbation;
  Vector3 anchor = Vector3(1800.0, 200.0, 150.0);
  std::vector<PlaneSpec> planes = default_planes();

  RobotModel model(const RobotModel& nominal = RobotModel::nominal()) const {
    return nominal.applied(perturbation);
  }
};

struct IkOptions {
  double tolerance = 1e-6;  // mm
  int max_iterations = 200;
  double damping = 1.0;     // mm, DLS lambda
  double max_step = 0.2;    // rad per iteration, largest joint
};

/// Damped-least-squares position IK. Throws UnreachableTarget when the
/// position error does not fall below the tolerance in time.
JointVector ik_position(const RobotModel& model, const Vector3& target, const JointVector& seed,
                        const IkOptions& opts = {});

/// Rectangle centred on the plane anchor, spanned by an in-plane basis.
struct SamplingRegion {
  double width = 400.0;   // mm
  double height = 400.0;  // mm
};

struct DatasetOptions {
  int samples_per_plane = 800;
  SamplingRegion region;
  IkOptions ik = {.tolerance = 1e-10};  // tight enough for exact noiseless consistency
  JointVector start = JointVector::Zero();  // IK seed for the first sample of every plane
  double arm_jitter = 0.05;                 // rad, joints 1-3, added to every IK seed
  double wrist_jitter = 0.5;                // rad, joints 4-6
};

/// Generates one group per plane of `truth`, plane_id = position in the list.
/// Throws RegionInfeasible when more than 10 N targets of a plane fail IK.
SampleGroups generate_dataset(const GroundTruth& truth, const NoiseSpec& noise, const DatasetOptions& opts = {},
                              const RobotModel& nominal = RobotModel::nominal());

/// `count` samples drawn uniformly without replacement, original order kept.
std::vector<MeasurementSample> subsample(const std::vector<MeasurementSample>& samples, std::size_t count,
                                         std::uint64_t seed);

}  // namespace mpcal
