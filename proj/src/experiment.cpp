#include "mpcal/experiment.hpp"

#include "mpcal/dataset_io.hpp"
#include "mpcal/errors.hpp"
#include "mpcal/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace mpcal {

namespace {

// Stream ids for derive_seed; plane ids are added to the per-plane streams.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kDrawStream = 1000;
constexpr std::uint64_t kBudgetStream = 2000;
constexpr std::uint64_t kSelectStream = 3000;

SampleGroups take_planes(const SampleGroups& groups, int count) {
  return SampleGroups(groups.begin(), groups.begin() + count);
}

std::vector<JointVector> joints_of(const SampleGroup& g) {
  std::vector<JointVector> out;
  out.reserve(g.size());
  for (const auto& s : g.samples) out.push_back(s.joints);
  return out;
}

SampleGroup pick(const SampleGroup& g, const std::vector<int>& idx) {
  SampleGroup out;
  out.plane_id = g.plane_id;
  for (int i : idx) out.samples.push_back(g.samples[static_cast<std::size_t>(i)]);
  return out;
}

MetricSet cable_metrics(const RobotModel& model, const Vector3& anchor, const SampleGroups& groups) {
  const auto flat = flatten(groups);
  return compute_metrics(position_error_per_sample(model, anchor, flat));
}

MetricSet cartesian_metrics(const RobotModel& model, const RobotModel& truth, const SampleGroups& groups) {
  const auto flat = flatten(groups);
  return compute_metrics(cartesian_error_per_sample(model, truth, flat));
}

// Everything a repeat needs that is shared between plane subsets.
struct RepeatData {
  SampleGroups train, test;
  SampleGroups budget;     // random k per plane (or the whole training pool)
  SampleGroups selected;   // DE selection (or the whole training pool)
  std::vector<double> selection_index;
};

}  // namespace

std::pair<std::vector<MeasurementSample>, std::vector<MeasurementSample>> split_dataset(
    const std::vector<MeasurementSample>& samples, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("split_dataset: train_fraction must lie in (0, 1)");
  }
  std::vector<MeasurementSample> train, test;
  for (const auto& g : group_by_plane(samples)) {
    const std::size_t n = g.size();
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (n_train < 3 || n - n_train < 3) {
      throw InvalidArgument("split_dataset: plane " + std::to_string(g.plane_id) + " has too few samples (" +
                            std::to_string(n) + ") for both sides to keep 3");
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(g.plane_id)));
    std::shuffle(idx.begin(), idx.end(), rng);
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    for (std::size_t i = 0; i < n; ++i) (i < n_train ? train : test).push_back(g.samples[idx[i]]);
  }
  return {std::move(train), std::move(test)};
}

GroundTruth SimulationSource::truth() const {
  std::mt19937_64 rng(truth_seed);
  GroundTruth gt;
  gt.perturbation = perturb_parameters(caps, rng);
  gt.anchor = anchor;
  gt.planes = planes;
  return gt;
}

void ExperimentConfig::validate() const {
  if (repeats < 1) throw InvalidArgument("repeats must be >= 1");
  if (draw_per_plane < 0) throw InvalidArgument("draw_per_plane must be >= 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train_fraction must lie in (0, 1)");
  if (k < 0) throw InvalidArgument("k must be >= 0");
  if (methods.empty()) throw InvalidArgument("at least one method is required");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end()) {
      throw InvalidArgument("unknown method '" + m + "' (expected ampc, mcs+ampc, lm or ls)");
    }
    if (!seen.insert(m).second) throw InvalidArgument("method '" + m + "' listed twice");
  }
  if (plane_subsets.empty()) throw InvalidArgument("at least one plane subset is required");
  for (int p : plane_subsets) {
    if (p < 1) throw InvalidArgument("plane subsets must be >= 1");
  }
  if (sample_files.empty()) {
    sim.noise.validate();
    if (sim.planes.empty()) throw InvalidArgument("simulation needs at least one plane");
    const int max_p = *std::max_element(plane_subsets.begin(), plane_subsets.end());
    if (max_p > static_cast<int>(sim.planes.size())) {
      throw InvalidArgument("plane subset " + std::to_string(max_p) + " exceeds the simulated planes");
    }
    if (draw_per_plane > sim.dataset.samples_per_plane) {
      throw InvalidArgument("draw_per_plane exceeds samples_per_plane");
    }
  }
  mcs.de.validate();
}

const AggregateRow* ExperimentReport::find(int subset, const std::string& method, const std::string& surface) const {
  for (const auto& row : aggregate) {
    if (row.subset == subset && row.method == method && row.surface == surface) return &row;
  }
  return nullptr;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const RobotModel nominal = RobotModel::nominal();

  std::optional<GroundTruth> truth = cfg.truth;
  SampleGroups file_groups;
  if (cfg.sample_files.empty()) {
    truth = cfg.sim.truth();
  } else {
    std::vector<MeasurementSample> all;
    for (const auto& f : cfg.sample_files) {
      auto part = read_samples(f);
      all.insert(all.end(), part.begin(), part.end());
    }
    file_groups = group_by_plane(all);
    const int max_p = *std::max_element(cfg.plane_subsets.begin(), cfg.plane_subsets.end());
    if (max_p > static_cast<int>(file_groups.size())) {
      throw InvalidArgument("plane subset " + std::to_string(max_p) + " exceeds the planes in the sample files");
    }
  }
  const std::optional<RobotModel> truth_model =
      truth ? std::optional<RobotModel>(truth->model(nominal)) : std::nullopt;

  ExperimentReport report;
  report.snapshot = cfg.snapshot;
  report.repeats = cfg.repeats;
  const bool wants_mcs = std::find(cfg.methods.begin(), cfg.methods.end(), "mcs+ampc") != cfg.methods.end();

  for (int rep = 0; rep < cfg.repeats; ++rep) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));

    SampleGroups groups;
    if (cfg.sample_files.empty()) {
      NoiseSpec noise = cfg.sim.noise;
      noise.seed = derive_seed(derive_seed(cfg.sim.noise.seed, kNoiseStream), static_cast<std::uint64_t>(rep));
      groups = generate_dataset(*truth, noise, cfg.sim.dataset, nominal);
    } else {
      groups = file_groups;
    }
    if (cfg.draw_per_plane > 0) {
      for (auto& g : groups) {
        if (static_cast<int>(g.size()) < cfg.draw_per_plane) {
          throw InvalidArgument("plane " + std::to_string(g.plane_id) + " holds fewer than draw_per_plane samples");
        }
        g.samples = subsample(g.samples, static_cast<std::size_t>(cfg.draw_per_plane),
                              derive_seed(rep_seed, kDrawStream + static_cast<std::uint64_t>(g.plane_id)));
      }
    }

    RepeatData d;
    const auto [train, test] = split_dataset(flatten(groups), cfg.train_fraction, derive_seed(rep_seed, kSplitStream));
    d.train = group_by_plane(train);
    d.test = group_by_plane(test);
    for (const auto& g : d.train) {
      const int pool = static_cast<int>(g.size());
      if (cfg.k > pool) {
        throw InvalidArgument("k = " + std::to_string(cfg.k) + " exceeds the training pool of plane " +
                              std::to_string(g.plane_id) + " (" + std::to_string(pool) + ")");
      }
      const int k = cfg.k > 0 ? cfg.k : pool;
      std::vector<int> all_idx(static_cast<std::size_t>(pool));
      std::iota(all_idx.begin(), all_idx.end(), 0);

      std::vector<int> random_idx = all_idx;
      if (k < pool) {
        std::mt19937_64 rng(derive_seed(rep_seed, kBudgetStream + static_cast<std::uint64_t>(g.plane_id)));
        std::shuffle(random_idx.begin(), random_idx.end(), rng);
        random_idx.resize(static_cast<std::size_t>(k));
        std::sort(random_idx.begin(), random_idx.end());
      }
      d.budget.push_back(pick(g, random_idx));

      if (wants_mcs && k < pool) {
        McsOptions opts = cfg.mcs;
        opts.de.seed = derive_seed(derive_seed(cfg.mcs.de.seed, rep_seed),
                                   kSelectStream + static_cast<std::uint64_t>(g.plane_id));
        const auto joints = joints_of(g);
        const SelectionResult sel = select_configurations(nominal, joints, k, opts);
        d.selected.push_back(pick(g, sel.chosen_indices));
        d.selection_index.push_back(sel.index_value);
      } else {
        d.selected.push_back(d.budget.back());
        d.selection_index.push_back(0.0);
      }
    }

    for (int p : cfg.plane_subsets) {
      const SampleGroups test_p = take_planes(d.test, p);

      // Uncalibrated reference: nominal arm, anchor trilaterated from the training data.
      {
        MethodRun run;
        run.subset = p;
        run.repeat = rep;
        run.method = "before";
        const SampleGroups train_p = take_planes(d.budget, p);
        try {
          const CalibrationState s0 = initial_state(train_p, nominal);
          run.train = cable_metrics(nominal, s0.anchor, train_p);
          run.test = cable_metrics(nominal, s0.anchor, test_p);
          if (truth_model) run.test_cartesian = cartesian_metrics(nominal, *truth_model, test_p);
          run.converged = true;
        } catch (const std::exception& e) {
          run.ok = false;
          run.error = e.what();
        }
        report.runs.push_back(std::move(run));
      }

      for (const auto& method : cfg.methods) {
        MethodRun run;
        run.subset = p;
        run.repeat = rep;
        run.method = method;
        const bool mcs = method == "mcs+ampc";
        const SampleGroups train_p = take_planes(mcs ? d.selected : d.budget, p);
        try {
          CalibrationResult res;
          const auto t0 = std::chrono::steady_clock::now();
          if (method == "ampc" || mcs) {
            res = calibrate_ampc(train_p, nominal, cfg.ampc);
          } else if (method == "lm") {
            res = calibrate_lm(train_p, nominal, cfg.lm);
          } else {
            res = calibrate_ls(train_p, nominal, cfg.ls);
          }
          run.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          run.iterations = res.iterations_used;
          run.converged = res.converged;
          run.train = cable_metrics(res.model, res.state.anchor, train_p);
          run.test = cable_metrics(res.model, res.state.anchor, test_p);
          if (truth_model) run.test_cartesian = cartesian_metrics(res.model, *truth_model, test_p);
          if (mcs) {
            run.selection_index = std::accumulate(d.selection_index.begin(), d.selection_index.begin() + p, 0.0) /
                                  static_cast<double>(p);
          }
        } catch (const std::exception& e) {
          run.ok = false;
          run.error = e.what();
        }
        report.runs.push_back(std::move(run));
      }
    }
  }

  // Aggregate in a fixed order: subset, method (before first), surface.
  std::vector<std::string> methods = {"before"};
  methods.insert(methods.end(), cfg.methods.begin(), cfg.methods.end());
  std::vector<std::string> surfaces = {"train", "test"};
  if (truth_model) surfaces.push_back("test_cartesian");
  for (int p : cfg.plane_subsets) {
    for (const auto& m : methods) {
      for (const auto& surface : surfaces) {
        AggregateRow row;
        row.subset = p;
        row.method = m;
        row.surface = surface;
        std::vector<double> rmse, mean_abs, max_abs, sd, iters, wall;
        for (const auto& run : report.runs) {
          if (run.subset != p || run.method != m) continue;
          ++row.runs_total;
          if (!run.ok) continue;
          const MetricSet& ms =
              surface == "train" ? run.train : surface == "test" ? run.test : *run.test_cartesian;
          ++row.runs_ok;
          rmse.push_back(ms.rmse);
          mean_abs.push_back(ms.mean_abs);
          max_abs.push_back(ms.max_abs);
          sd.push_back(ms.sample_std);
          iters.push_back(run.iterations);
          wall.push_back(run.wall_time_s);
        }
        row.rmse = summarize(rmse);
        row.mean_abs = summarize(mean_abs);
        row.max_abs = summarize(max_abs);
        row.sample_std = summarize(sd);
        row.iterations = summarize(iters);
        row.wall_time_s = summarize(wall);
        report.aggregate.push_back(row);
      }
    }
  }
  return report;
}

namespace {

std::vector<std::string> snapshot_lines(const std::string& snapshot) {
  std::vector<std::string> out;
  std::istringstream in(snapshot);
  for (std::string line; std::getline(in, line);) out.push_back("# config: " + line);
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pm(const Summary& s, int digits = 4) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*g +- %.*g", digits, s.mean, digits, s.std);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  const auto comments = snapshot_lines(report.snapshot);

  {
    std::ofstream out = open_out(dir / "report.txt");
    for (const auto& c : comments) out << c << '\n';
    out << "repeats: " << report.repeats << '\n';
    out << "columns: mean +- sample standard deviation over repeats (mm)\n";
    out << "  rmse        root mean square of the errors\n";
    out << "  mean_abs    mean absolute error\n";
    out << "  max_abs     largest absolute error\n";
    out << "  sample_std  standard deviation of the absolute errors\n";
    out << "surfaces: train and test use the cable-length residual; test_cartesian is |p_model - p_true|\n";
    for (const auto& row : report.aggregate) {
      char head[256];
      std::snprintf(head, sizeof head, "%-7d %-9s %-15s", row.subset, row.method.c_str(), row.surface.c_str());
      out << head << "  rmse " << pm(row.rmse) << "  mean_abs " << pm(row.mean_abs) << "  max_abs "
          << pm(row.max_abs) << "  sample_std " << pm(row.sample_std) << "  iterations " << pm(row.iterations, 3)
          << "  wall_s " << pm(row.wall_time_s, 3) << "  ok " << row.runs_ok << "/" << row.runs_total
          << (row.partial() ? "  PARTIAL" : "") << '\n';
    }
    bool failures = false;
    for (const auto& run : report.runs) {
      if (run.ok) continue;
      if (!failures) out << "failures:\n";
      failures = true;
      out << "  planes " << run.subset << " repeat " << run.repeat << " " << run.method << ": " << run.error << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + (dir / "report.txt").string());
  }

  {
    std::ofstream out = open_out(dir / "report.csv");
    for (const auto& c : comments) out << c << '\n';
    out << "planes,repeat,method,surface,status,rmse,mean_abs,max_abs,sample_std,n,iterations,converged,wall_s,"
           "selection_index,error\n";
    for (const auto& run : report.runs) {
      std::vector<std::pair<std::string, const MetricSet*>> rows = {{"train", &run.train}, {"test", &run.test}};
      if (run.test_cartesian || (!run.ok && report.find(run.subset, run.method, "test_cartesian"))) {
        rows.emplace_back("test_cartesian", run.test_cartesian ? &*run.test_cartesian : nullptr);
      }
      for (const auto& [surface, ms] : rows) {
        out << run.subset << ',' << run.repeat << ',' << run.method << ',' << surface << ','
            << (run.ok ? "ok" : "failed") << ',';
        if (run.ok && ms) {
          out << fmt(ms->rmse) << ',' << fmt(ms->mean_abs) << ',' << fmt(ms->max_abs) << ',' << fmt(ms->sample_std)
              << ',' << ms->n;
        } else {
          out << ",,,,";
        }
        out << ',' << run.iterations << ',' << (run.converged ? 1 : 0) << ',' << fmt(run.wall_time_s) << ','
            << fmt(run.selection_index) << ',' << csv_field(run.error) << '\n';
      }
    }
    if (!out) throw std::runtime_error("write failed: " + (dir / "report.csv").string());
  }

  {
    std::ofstream out = open_out(dir / "summary.csv");
    for (const auto& c : comments) out << c << '\n';
    out << "planes,method,surface,runs_ok,runs_total,rmse_mean,rmse_std,mean_abs_mean,mean_abs_std,max_abs_mean,"
           "max_abs_std,sample_std_mean,sample_std_std,iterations_mean,iterations_std,wall_s_mean,wall_s_std\n";
    for (const auto& r : report.aggregate) {
      out << r.subset << ',' << r.method << ',' << r.surface << ',' << r.runs_ok << ',' << r.runs_total;
      for (const Summary* s : {&r.rmse, &r.mean_abs, &r.max_abs, &r.sample_std, &r.iterations, &r.wall_time_s}) {
        out << ',' << fmt(s->mean) << ',' << fmt(s->std);
      }
      out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + (dir / "summary.csv").string());
  }
}

}  // namespace mpcal
