#pragma once

// Run configuration for the mpcal command line: a JSON file, then flag
// overrides. Unknown keys are rejected and everything is validated before
// any computation starts.

#include "mpcal/experiment.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mpcal::cli {

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out = "out";
  std::vector<std::filesystem::path> samples;  // input sample files
  std::optional<std::filesystem::path> truth;  // evaluate only: enables the Cartesian surface
  std::vector<std::string> methods = kKnownMethods;
  int planes = 3;                         // simulate: planes generated; select/calibrate: first n used
  std::vector<int> plane_subsets = {1, 2, 3};  // evaluate
  int repeats = 10;
  int k = 0;
  std::vector<int> curve;
  int pool_per_plane = 0;  // select: draw this many per plane first (0 keeps all)
  int draw_per_plane = 200;
  double train_fraction = 0.2;

  // Simulation.
  int samples_per_plane = 800;
  std::optional<std::uint64_t> perturbation_seed;  // defaults to seed
  double angle_cap_deg = 1.0;
  double length_cap_mm = 2.0;
  Vector3 anchor = GroundTruth{}.anchor;
  std::vector<PlaneSpec> plane_specs = default_planes();
  SamplingRegion region;
  NoiseSpec noise;

  AmpcConfig ampc;
  LmConfig lm;
  LsConfig ls;
  McsOptions mcs;

  void validate() const;
  /// Effective configuration as pretty JSON, embedded in every output. The
  /// output directory is left out so reruns elsewhere give identical files.
  std::string snapshot() const;

  GroundTruth ground_truth() const;
  ExperimentConfig experiment() const;
};

/// Throws InvalidArgument on unknown keys, wrong types or bad values.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);

/// Cable sigma in mm; the dial sigma keeps its ratio to the default cable sigma.
void apply_noise(RunConfig& cfg, double cable_mm);

std::vector<std::string> split_list(const std::string& text);

}  // namespace mpcal::cli
