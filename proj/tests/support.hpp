#pragma once

#include "mpcal/experiment.hpp"
#include "mpcal/kinematics.hpp"
#include "mpcal/measurement.hpp"
#include "mpcal/simulator.hpp"

#include <random>
#include <vector>

namespace mpcal::test {

inline JointVector random_joints(std::mt19937_64& rng, double range = 2.5) {
  std::uniform_real_distribution<double> u(-range, range);
  JointVector q;
  for (int k = 0; k < kJointCount; ++k) q(k) = u(rng);
  return q;
}

inline std::vector<JointVector> random_pool(int n, std::uint64_t seed, double range = 2.5) {
  std::mt19937_64 rng(seed);
  std::vector<JointVector> out(static_cast<std::size_t>(n));
  for (auto& q : out) q = random_joints(rng, range);
  return out;
}

inline std::vector<JointVector> joints_of(const std::vector<MeasurementSample>& samples) {
  std::vector<JointVector> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.joints);
  return out;
}

/// Perturbed arm, default planes and anchor; the perturbation comes from `truth_seed`.
inline GroundTruth make_truth(std::uint64_t truth_seed = 7) {
  SimulationSource src;
  src.truth_seed = truth_seed;
  return src.truth();
}

inline SampleGroups make_groups(const GroundTruth& truth, int per_plane, double cable_sigma, double dial_sigma,
                                std::uint64_t noise_seed = 3, int planes = 3) {
  GroundTruth t = truth;
  t.planes.resize(static_cast<std::size_t>(planes));
  NoiseSpec noise{cable_sigma, dial_sigma, 0.0, noise_seed};
  DatasetOptions opts;
  opts.samples_per_plane = per_plane;
  return generate_dataset(t, noise, opts);
}

inline SampleGroups noiseless_groups(const GroundTruth& truth, int per_plane, std::uint64_t seed = 3,
                                     int planes = 3) {
  return make_groups(truth, per_plane, 0.0, 0.0, seed, planes);
}

}  // namespace mpcal::test
