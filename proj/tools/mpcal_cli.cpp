// mpcal: simulate data, select configurations, calibrate, evaluate.
//
//   mpcal simulate  [--config f] [--seed n] [--planes n] [--noise mm] [--out dir]
//   mpcal select    --samples a.csv[,b.csv] (--k n | --curve 10,25,...) [--planes n]
//   mpcal calibrate --samples ... [--methods ampc,lm] [--k n] [--planes n]
//   mpcal evaluate  [--samples ... [--truth ground_truth.json]] [--methods ...] [--planes n]
//                   [--repeats n] [--k n]
//
// Exit codes: 0 success, 1 runtime failure (including failed runs inside an
// evaluation), 2 invalid configuration or usage.

#include "run_config.hpp"

#include "mpcal/dataset_io.hpp"
#include "mpcal/errors.hpp"
#include "mpcal/experiment.hpp"
#include "mpcal/random.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

namespace {

using namespace mpcal;
using cli::RunConfig;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

std::vector<std::string> provenance(const RunConfig& cfg, const std::string& command) {
  std::vector<std::string> out = {"command: " + command};
  std::istringstream in(cfg.snapshot());
  for (std::string line; std::getline(in, line);) out.push_back("config: " + line);
  return out;
}

SampleGroups load_groups(const RunConfig& cfg) {
  if (cfg.samples.empty()) throw InvalidArgument("--samples is required");
  std::vector<MeasurementSample> all;
  for (const auto& f : cfg.samples) {
    auto part = read_samples(f);
    all.insert(all.end(), part.begin(), part.end());
  }
  SampleGroups groups = group_by_plane(all);
  if (static_cast<int>(groups.size()) < cfg.planes) {
    throw InvalidArgument("--planes " + std::to_string(cfg.planes) + " but the samples hold " +
                          std::to_string(groups.size()) + " plane(s)");
  }
  groups.resize(static_cast<std::size_t>(cfg.planes));
  return groups;
}

int cmd_simulate(const RunConfig& cfg) {
  if (cfg.planes > static_cast<int>(cfg.plane_specs.size())) {
    throw InvalidArgument("--planes exceeds the configured planes");
  }
  GroundTruth truth = cfg.ground_truth();
  truth.planes.resize(static_cast<std::size_t>(cfg.planes));
  const ExperimentConfig e = cfg.experiment();
  const SampleGroups groups = generate_dataset(truth, e.sim.noise, e.sim.dataset);

  std::filesystem::create_directories(cfg.out);
  const auto comments = provenance(cfg, "simulate");
  for (const auto& g : groups) {
    const auto path = cfg.out / ("plane_" + std::to_string(g.plane_id) + ".csv");
    write_samples(path, g.samples, comments);
    std::cout << path.string() << ": " << g.size() << " samples (" << truth.planes[static_cast<std::size_t>(g.plane_id)].name
              << ")\n";
  }
  write_ground_truth(cfg.out / "ground_truth.json", truth, cfg.snapshot());
  std::cout << (cfg.out / "ground_truth.json").string() << "\n";
  return 0;
}

int cmd_select(const RunConfig& cfg) {
  if (cfg.k <= 0 && cfg.curve.empty()) throw InvalidArgument("select needs --k or --curve");
  const SampleGroups groups = load_groups(cfg);
  std::filesystem::create_directories(cfg.out);
  const auto comments = provenance(cfg, "select");
  const RobotModel nominal = RobotModel::nominal();
  for (const auto& g : groups) {
    std::vector<MeasurementSample> pool = g.samples;
    if (cfg.pool_per_plane > 0) {
      pool = subsample(pool, static_cast<std::size_t>(cfg.pool_per_plane),
                       derive_seed(cfg.seed, static_cast<std::uint64_t>(g.plane_id)));
    }
    std::vector<JointVector> joints;
    for (const auto& s : pool) joints.push_back(s.joints);
    McsOptions opts = cfg.mcs;
    opts.de.seed = derive_seed(cfg.mcs.de.seed, static_cast<std::uint64_t>(g.plane_id));
    const std::string tag = "plane_" + std::to_string(g.plane_id);

    if (cfg.k > 0) {
      const SelectionResult sel = select_configurations(nominal, joints, cfg.k, opts);
      write_selection(cfg.out / ("selection_" + tag + ".csv"), sel, comments);
      std::vector<MeasurementSample> chosen;
      for (int i : sel.chosen_indices) chosen.push_back(pool[static_cast<std::size_t>(i)]);
      write_samples(cfg.out / ("selected_" + tag + ".csv"), chosen, comments);
      std::printf("%s: %d of %zu configurations, index %.6g (%d generations)\n", tag.c_str(), cfg.k, pool.size(),
                  sel.index_value, sel.generations_used);
    }
    if (!cfg.curve.empty()) {
      const auto curve = observability_curve(nominal, joints, cfg.curve, opts);
      write_curve(cfg.out / ("curve_" + tag + ".csv"), curve, comments);
      std::printf("%s curve:", tag.c_str());
      for (const auto& p : curve) std::printf(" %d:%.4g", p.k, p.index_value);
      std::printf("\n");
    }
  }
  return 0;
}

int cmd_calibrate(const RunConfig& cfg) {
  const SampleGroups groups = load_groups(cfg);
  std::filesystem::create_directories(cfg.out);
  const auto comments = provenance(cfg, "calibrate");
  const RobotModel nominal = RobotModel::nominal();
  const Vector3 initial_anchor = initial_state(groups, nominal).anchor;

  for (const auto& method : cfg.methods) {
    SampleGroups data = groups;
    if (method == "mcs+ampc" && cfg.k > 0) {
      for (auto& g : data) {
        if (cfg.k > static_cast<int>(g.size())) throw InvalidArgument("--k exceeds the samples of a plane");
        std::vector<JointVector> joints;
        for (const auto& s : g.samples) joints.push_back(s.joints);
        McsOptions opts = cfg.mcs;
        opts.de.seed = derive_seed(cfg.mcs.de.seed, static_cast<std::uint64_t>(g.plane_id));
        const SelectionResult sel = select_configurations(nominal, joints, cfg.k, opts);
        std::vector<MeasurementSample> chosen;
        for (int i : sel.chosen_indices) chosen.push_back(g.samples[static_cast<std::size_t>(i)]);
        g.samples = std::move(chosen);
      }
    }
    CalibrationResult res;
    if (method == "ampc" || method == "mcs+ampc") {
      res = calibrate_ampc(data, nominal, cfg.ampc);
      res.method = method;
    } else if (method == "lm") {
      res = calibrate_lm(data, nominal, cfg.lm);
    } else {
      res = calibrate_ls(data, nominal, cfg.ls);
    }
    write_parameters(cfg.out / ("parameters_" + method + ".csv"), nominal, res, initial_anchor, comments);
    write_trace(cfg.out / ("trace_" + method + ".csv"), res, comments);
    const auto flat = flatten(data);
    const MetricSet m = compute_metrics(position_error_per_sample(res.model, res.state.anchor, flat));
    std::printf("%-9s iterations %3d  converged %s  cable rmse %.6g mm  anchor (%.4f, %.4f, %.4f)  %.3f s\n",
                method.c_str(), res.iterations_used, res.converged ? "yes" : "no ", m.rmse, res.state.anchor.x(),
                res.state.anchor.y(), res.state.anchor.z(), res.wall_time_s);
  }
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  ExperimentConfig e = cfg.experiment();
  if (cfg.truth) {
    if (cfg.samples.empty()) throw InvalidArgument("truth is only used with --samples");
    e.truth = read_ground_truth(*cfg.truth);
  }
  const ExperimentReport report = run_experiment(e);
  write_report(cfg.out, report);

  bool failed = false;
  for (const auto& run : report.runs) failed = failed || !run.ok;
  std::printf("%-7s %-9s %-15s %-22s %-22s %-22s %s\n", "planes", "method", "surface", "rmse (mm)", "mean_abs (mm)",
              "max_abs (mm)", "iterations");
  for (const auto& row : report.aggregate) {
    if (row.surface == "train") continue;
    std::printf("%-7d %-9s %-15s %9.4g +- %-9.3g %9.4g +- %-9.3g %9.4g +- %-9.3g %5.1f +- %.1f%s\n", row.subset,
                row.method.c_str(), row.surface.c_str(), row.rmse.mean, row.rmse.std, row.mean_abs.mean,
                row.mean_abs.std, row.max_abs.mean, row.max_abs.std, row.iterations.mean, row.iterations.std,
                row.partial() ? "  PARTIAL" : "");
  }
  std::cout << "report: " << (cfg.out / "report.txt").string() << "\n";
  if (failed) {
    std::cerr << "some runs failed, see report.txt\n";
    return kExitFailure;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinematic calibration with multi-plane contact constraints"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out, methods, curve, samples, truth;
  std::uint64_t seed = 0;
  int planes = 0, repeats = 0, k = 0;
  double noise = 0.0;
  auto* o_config = app.add_option("--config", config_path, "JSON run configuration");
  auto* o_seed = app.add_option("--seed", seed, "master seed");
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_methods = app.add_option("--methods", methods, "comma list of ampc, mcs+ampc, lm, ls");
  auto* o_planes = app.add_option("--planes", planes, "number of planes (1, 2 or 3)");
  auto* o_noise = app.add_option("--noise", noise, "cable noise sigma in mm; dial noise scales along");
  auto* o_repeats = app.add_option("--repeats", repeats, "experiment repetitions");
  auto* o_curve = app.add_option("--curve", curve, "comma list of K values for the observability curve");
  auto* o_k = app.add_option("--k", k, "configurations per plane");
  auto* o_samples = app.add_option("--samples", samples, "comma list of sample files");
  auto* o_truth = app.add_option("--truth", truth, "ground-truth sidecar (evaluate only, adds Cartesian error)");

  auto* simulate = app.add_subcommand("simulate", "write simulated sample files and a ground-truth sidecar");
  auto* select = app.add_subcommand("select", "select measurement configurations");
  auto* calibrate = app.add_subcommand("calibrate", "identify parameters from sample files");
  auto* evaluate = app.add_subcommand("evaluate", "repeated train/test experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    RunConfig cfg = *o_config ? cli::load_config(config_path) : RunConfig{};
    if (*o_seed) cfg.seed = seed;
    if (*o_out) cfg.out = out;
    if (*o_methods) cfg.methods = cli::split_list(methods);
    if (*o_planes) {
      cfg.planes = planes;
      cfg.plane_subsets = {planes};
    }
    if (*o_noise) cli::apply_noise(cfg, noise);
    if (*o_repeats) cfg.repeats = repeats;
    if (*o_curve) {
      cfg.curve.clear();
      for (const auto& item : cli::split_list(curve)) {
        std::size_t used = 0;
        const int v = std::stoi(item, &used);
        if (used != item.size()) throw InvalidArgument("--curve: '" + item + "' is not an integer");
        cfg.curve.push_back(v);
      }
    }
    if (*o_k) cfg.k = k;
    if (*o_samples) {
      cfg.samples.clear();
      for (const auto& f : cli::split_list(samples)) cfg.samples.emplace_back(f);
    }
    if (*o_truth) cfg.truth = truth;
    cfg.validate();

    if (*simulate) return cmd_simulate(cfg);
    if (*select) return cmd_select(cfg);
    if (*calibrate) return cmd_calibrate(cfg);
    if (*evaluate) return cmd_evaluate(cfg);
  } catch (const std::invalid_argument& e) {  // includes InvalidArgument
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
