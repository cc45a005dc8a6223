#pragma once

// Repeated calibration experiment: draw, split, optionally select
// configurations, calibrate with each method and score on train and test.

#include "mpcal/ampc.hpp"
#include "mpcal/baselines.hpp"
#include "mpcal/mcs.hpp"
#include "mpcal/metrics.hpp"
#include "mpcal/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mpcal {

/// Per-plane stratified split; each plane gets round(train_fraction * N)
/// training samples. Planes are shuffled with independent seeds derived from
/// `seed` and the plane id, so a plane's split does not depend on which other
/// planes are present. Throws InvalidArgument unless 0 < train_fraction < 1
/// and both sides keep >= 3 samples of every plane.
std::pair<std::vector<MeasurementSample>, std::vector<MeasurementSample>> split_dataset(
    const std::vector<MeasurementSample>& samples, double train_fraction, std::uint64_t seed);

inline const std::vector<std::string> kKnownMethods = {"ampc", "mcs+ampc", "lm", "ls"};

struct SimulationSource {
  PerturbationCaps caps;
  std::uint64_t truth_seed = 1;  // perturbation draw; fixed across repeats
  NoiseSpec noise;               // noise.seed is the base of the per-repeat seeds
  DatasetOptions dataset;
  std::vector<PlaneSpec> planes = default_planes();
  Vector3 anchor = GroundTruth{}.anchor;

  GroundTruth truth() const;
};

struct ExperimentConfig {
  std::vector<std::filesystem::path> sample_files;  // empty: simulate
  std::optional<GroundTruth> truth;                 // file data only, enables the Cartesian surface
  SimulationSource sim;
  int draw_per_plane = 200;  // 0 keeps every sample
  double train_fraction = 0.2;
  std::vector<std::string> methods = kKnownMethods;
  std::vector<int> plane_subsets = {1, 2, 3};  // first p planes
  int repeats = 10;
  std::uint64_t seed = 1;
  // Configurations per plane handed to every method: mcs+ampc takes the DE
  // selection, the others a random subset of the same size. 0 means the
  // whole training pool.
  int k = 0;
  AmpcConfig ampc;
  LmConfig lm;
  LsConfig ls;
  McsOptions mcs;
  std::string snapshot;  // configuration text embedded in outputs

  void validate() const;
};

struct MethodRun {
  int subset = 0;
  int repeat = 0;
  std::string method;  // "before" is the uncalibrated nominal model
  bool ok = true;
  std::string error;
  MetricSet train, test;
  std::optional<MetricSet> test_cartesian;
  int iterations = 0;
  bool converged = false;
  double wall_time_s = 0.0;
  double selection_index = 0.0;  // mcs+ampc only: mean index over planes
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation over repeats
};

struct AggregateRow {
  int subset = 0;
  std::string method;
  std::string surface;  // train, test, test_cartesian
  int runs_ok = 0;
  int runs_total = 0;
  Summary rmse, mean_abs, max_abs, sample_std, iterations, wall_time_s;
  bool partial() const { return runs_ok < runs_total; }
};

struct ExperimentReport {
  std::string snapshot;
  int repeats = 0;
  std::vector<MethodRun> runs;
  std::vector<AggregateRow> aggregate;

  /// nullptr when absent.
  const AggregateRow* find(int subset, const std::string& method, const std::string& surface) const;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// report.txt (readable tables) and report.csv (one row per repeat, method
/// and surface) inside `dir`.
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);

Summary summarize(const std::vector<double>& values);

}  // namespace mpcal
