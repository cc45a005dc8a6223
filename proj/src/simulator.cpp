#include "mpcal/simulator.hpp"

#include "mpcal/errors.hpp"
#include "mpcal/plane_fit.hpp"
#include "mpcal/random.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

namespace mpcal {

std::vector<PlaneSpec> default_planes() {
  const double s = std::sqrt(0.5);
  return {
      {"horizontal", Vector3(1400.0, 0.0, 600.0), Vector3(0.0, 0.0, 1.0)},
      {"tilted45", Vector3(1200.0, 500.0, 1000.0), Vector3(0.0, s, s)},
      {"vertical", Vector3(1300.0, -700.0, 1100.0), Vector3(0.0, 1.0, 0.0)},
  };
}

void NoiseSpec::validate() const {
  if (!(cable_sigma >= 0.0) || !(dial_sigma >= 0.0) || !(joint_sigma >= 0.0)) {
    throw InvalidArgument("noise sigmas must be >= 0");
  }
}

ParameterVector perturb_parameters(const PerturbationCaps& caps, std::mt19937_64& rng) {
  if (!(caps.angle >= 0.0) || !(caps.length >= 0.0)) throw InvalidArgument("perturbation caps must be >= 0");
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ParameterVector p;
  for (int i = 0; i < kParamCount; ++i) {
    const double draw = unit(rng);  // drawn for every entry so the stream does not depend on the mask
    if (caps.mask.test(i)) p[i] = draw * (is_angle_param(i) ? caps.angle : caps.length);
  }
  return p;
}

JointVector ik_position(const RobotModel& model, const Vector3& target, const JointVector& seed,
                        const IkOptions& opts) {
  if (!target.allFinite() || !seed.allFinite()) throw InvalidArgument("ik_position: non-finite input");
  JointVector q = seed;
  const double lambda2 = opts.damping * opts.damping;
  for (int it = 0; it <= opts.max_iterations; ++it) {
    const Vector3 err = target - tool_position(model, q);
    if (err.norm() <= opts.tolerance) return q;
    if (it == opts.max_iterations) break;
    const JointJacobian j = joint_jacobian(model, q);
    const Matrix3 jjt = j * j.transpose() + lambda2 * Matrix3::Identity();
    JointVector dq = j.transpose() * jjt.ldlt().solve(err);
    const double biggest = dq.cwiseAbs().maxCoeff();
    if (biggest > opts.max_step) dq *= opts.max_step / biggest;
    q += dq;
  }
  throw UnreachableTarget("ik_position: no convergence towards (" + std::to_string(target.x()) + ", " +
                          std::to_string(target.y()) + ", " + std::to_string(target.z()) + ")");
}

namespace {

SampleGroup generate_plane(const RobotModel& truth_model, const GroundTruth& truth, int plane,
                           const NoiseSpec& noise, const DatasetOptions& opts) {
  const PlaneSpec& spec = truth.planes[static_cast<std::size_t>(plane)];
  const auto [u, v] = plane_basis(spec.normal);
  std::mt19937_64 rng(derive_seed(noise.seed, static_cast<std::uint64_t>(plane)));
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SampleGroup group;
  group.plane_id = plane;
  const int n = opts.samples_per_plane;
  const long max_attempts = 10L * n;
  long attempts = 0;
  JointVector prev = opts.start;
  while (static_cast<int>(group.samples.size()) < n) {
    if (attempts++ >= max_attempts) {
      throw RegionInfeasible("plane '" + spec.name + "': too many unreachable targets in the sampling region");
    }
    const Vector3 target =
        spec.point + unit(rng) * opts.region.width * u + unit(rng) * opts.region.height * v;
    JointVector seed = prev;
    for (int k = 0; k < kJointCount; ++k) seed(k) += jitter(rng) * (k < 3 ? opts.arm_jitter : opts.wrist_jitter);
    JointVector q;
    try {
      q = ik_position(truth_model, target, seed, opts.ik);
    } catch (const UnreachableTarget&) {
      continue;
    }
    for (int k = 0; k < kJointCount; ++k) q(k) = normalize_angle(q(k));
    prev = q;

    // Noise is drawn unconditionally so a zero sigma does not shift the stream.
    MeasurementSample s;
    s.plane_id = plane;
    const Vector3 p = tool_position(truth_model, q);
    for (int k = 0; k < kJointCount; ++k) s.joints(k) = q(k) + noise.joint_sigma * gauss(rng);
    s.cable_length = (p - truth.anchor).norm() + noise.cable_sigma * gauss(rng);
    s.dial_reading = 0.0 + noise.dial_sigma * gauss(rng);  // + 0.0 turns -0 into 0
    group.samples.push_back(s);
  }
  return group;
}

}  // namespace

SampleGroups generate_dataset(const GroundTruth& truth, const NoiseSpec& noise, const DatasetOptions& opts,
                              const RobotModel& nominal) {
  noise.validate();
  if (opts.samples_per_plane < 3) throw InvalidArgument("generate_dataset: at least 3 samples per plane");
  if (truth.planes.empty()) throw InvalidArgument("generate_dataset: no planes");
  if (!(opts.region.width >= 0.0) || !(opts.region.height >= 0.0)) {
    throw InvalidArgument("generate_dataset: negative sampling region");
  }
  const RobotModel model = truth.model(nominal);
  const int planes = static_cast<int>(truth.planes.size());
  SampleGroups out(static_cast<std::size_t>(planes));
  // Planes use independent derived seeds, so the result does not depend on
  // how they are scheduled. Exceptions are carried out of the parallel region.
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(planes));
#pragma omp parallel for schedule(dynamic, 1)
  for (int j = 0; j < planes; ++j) {
    try {
      out[static_cast<std::size_t>(j)] = generate_plane(model, truth, j, noise, opts);
    } catch (...) {
      errors[static_cast<std::size_t>(j)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<MeasurementSample> subsample(const std::vector<MeasurementSample>& samples, std::size_t count,
                                         std::uint64_t seed) {
  if (count > samples.size()) throw InvalidArgument("subsample: count exceeds the available samples");
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<MeasurementSample> out;
  out.reserve(count);
  for (std::size_t i : idx) out.push_back(samples[i]);
  return out;
}

}  // namespace mpcal
