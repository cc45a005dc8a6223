#include "doctest.h"
#include "support.hpp"

#include "mpcal/calibration.hpp"
#include "mpcal/dataset_io.hpp"
#include "mpcal/errors.hpp"
#include "mpcal/experiment.hpp"
#include "mpcal/metrics.hpp"
#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

using namespace mpcal;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mpcal_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("compute_metrics") {
  const std::vector<double> e34 = {3.0, 4.0};
  const MetricSet m = compute_metrics(e34);
  CHECK(std::abs(m.rmse - std::sqrt(12.5)) < 1e-12);
  CHECK(m.mean_abs == 3.5);
  CHECK(m.max_abs == 4.0);
  CHECK(std::abs(m.sample_std - std::sqrt(0.5)) < 1e-12);
  CHECK(m.n == 2);

  const std::vector<double> same = {-2.5, -2.5, -2.5};
  const MetricSet s = compute_metrics(same);
  CHECK(s.rmse == doctest::Approx(2.5));
  CHECK(s.mean_abs == 2.5);
  CHECK(s.max_abs == 2.5);
  CHECK(s.sample_std == doctest::Approx(0.0));

  const std::vector<double> zero = {0.0};
  const MetricSet z = compute_metrics(zero);
  CHECK(z.rmse == 0.0);
  CHECK(z.mean_abs == 0.0);
  CHECK(z.max_abs == 0.0);
  CHECK(z.sample_std == 0.0);

  CHECK_THROWS_AS(compute_metrics(std::vector<double>{}), InvalidArgument);

  SUBCASE("ordering, permutation invariance") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<double> e(1 + trial % 37);
      for (auto& v : e) v = g(rng) * (trial % 5 == 0 ? 100.0 : 1.0);
      const MetricSet a = compute_metrics(e);
      CHECK(a.mean_abs <= a.rmse * (1 + 1e-14));
      CHECK(a.rmse <= a.max_abs * (1 + 1e-14));
      CHECK(a.sample_std >= 0.0);
      std::shuffle(e.begin(), e.end(), rng);
      const MetricSet b = compute_metrics(e);
      CHECK(b.rmse == doctest::Approx(a.rmse).epsilon(1e-14));
      CHECK(b.mean_abs == doctest::Approx(a.mean_abs).epsilon(1e-14));
      CHECK(b.max_abs == a.max_abs);
    }
  }
}

TEST_CASE("per-sample errors") {
  const auto truth = test::make_truth();
  const auto samples = flatten(test::noiseless_groups(truth, 40, 11));
  const RobotModel true_model = truth.model();
  for (double e : position_error_per_sample(true_model, truth.anchor, samples)) CHECK(std::abs(e) < 1e-9);
  for (double e : cartesian_error_per_sample(true_model, true_model, samples)) CHECK(e == 0.0);
  const RobotModel nominal = RobotModel::nominal();
  const Vector3 anchor = initial_state(test::noiseless_groups(truth, 40, 11), nominal).anchor;
  const auto before = compute_metrics(position_error_per_sample(nominal, anchor, samples));
  CHECK(before.mean_abs > 0.3);
  CHECK(before.mean_abs < 10.0);
}

TEST_CASE("sample files") {
  const fs::path dir = scratch_dir("io");
  const auto truth = test::make_truth();
  const auto samples = flatten(test::make_groups(truth, 800, 0.05, 0.01, 12));
  REQUIRE(samples.size() == 2400);

  SUBCASE("round trip") {
    write_samples(dir / "s.csv", samples, {"seed 12"});
    const auto back = read_samples(dir / "s.csv");
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      CHECK((back[i].joints - samples[i].joints).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(std::abs(back[i].cable_length - samples[i].cable_length) < 1e-9);
      CHECK(std::abs(back[i].dial_reading - samples[i].dial_reading) < 1e-9);
      CHECK(back[i].plane_id == samples[i].plane_id);
    }
    CHECK(read_text(dir / "s.csv").rfind("# seed 12\n", 0) == 0);
  }
  SUBCASE("header only") {
    write_text(dir / "empty.csv", std::string(kSampleHeader) + "\n");
    CHECK(read_samples(dir / "empty.csv").empty());
  }
  SUBCASE("a short row names its line") {
    write_text(dir / "short.csv", std::string("# note\n") + kSampleHeader + "\n1,2,3,4,5,6,1000,0,0\n1,2,3,4,5,1000,0,0\n");
    try {
      read_samples(dir / "short.csv");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
      CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
  }
  SUBCASE("bad values and headers") {
    write_text(dir / "nan.csv", std::string(kSampleHeader) + "\n1,2,3,4,5,6,abc,0,0\n");
    CHECK_THROWS_AS(read_samples(dir / "nan.csv"), ParseError);
    write_text(dir / "neg.csv", std::string(kSampleHeader) + "\n1,2,3,4,5,6,1000,0,-1\n");
    CHECK_THROWS_AS(read_samples(dir / "neg.csv"), ParseError);
    write_text(dir / "hdr.csv", "a,b,c\n1,2,3\n");
    CHECK_THROWS_AS(read_samples(dir / "hdr.csv"), FormatError);
    write_text(dir / "none.csv", "");
    CHECK_THROWS_AS(read_samples(dir / "none.csv"), FormatError);
    CHECK_THROWS(read_samples(dir / "missing.csv"));
  }
  SUBCASE("ground truth sidecar") {
    write_ground_truth(dir / "gt.json", truth, R"({"seed": 7})");
    const GroundTruth back = read_ground_truth(dir / "gt.json");
    CHECK((back.perturbation - truth.perturbation).values().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.anchor - truth.anchor).norm() < 1e-12);
    REQUIRE(back.planes.size() == truth.planes.size());
    for (std::size_t j = 0; j < back.planes.size(); ++j) {
      CHECK(back.planes[j].name == truth.planes[j].name);
      CHECK((back.planes[j].normal - truth.planes[j].normal).norm() < 1e-12);
    }
  }
  SUBCASE("parameter table") {
    CalibrationResult r;
    r.state.u = truth.perturbation;
    r.state.anchor = truth.anchor;
    r.model = RobotModel::nominal().applied(truth.perturbation);
    write_parameters(dir / "p.csv", RobotModel::nominal(), r, Vector3::Zero());
    const auto rows = read_parameters(dir / "p.csv");
    CHECK(rows.size() == 27);
    const auto& d2 = rows.at("d2");
    CHECK(d2.unit == "mm");
    CHECK(std::abs(d2.delta - truth.perturbation(ParamKind::D, 1)) < 1e-9);
    const auto& t3 = rows.at("theta3");
    CHECK(t3.unit == "deg");
    CHECK(std::abs(t3.delta - rad_to_deg(truth.perturbation(ParamKind::Theta, 2))) < 1e-9);
  }
  fs::remove_all(dir);
}

TEST_CASE("split_dataset") {
  const auto truth = test::make_truth();
  const auto groups = test::noiseless_groups(truth, 200, 13);
  const auto all = flatten(groups);
  const auto [train, test] = split_dataset(all, 0.2, 5);
  std::map<int, int> tr, te;
  for (const auto& s : train) ++tr[s.plane_id];
  for (const auto& s : test) ++te[s.plane_id];
  for (int j = 0; j < 3; ++j) {
    CHECK(tr[j] == 40);
    CHECK(te[j] == 160);
  }

  std::multiset<double> in, out;
  for (const auto& s : all) in.insert(s.cable_length);
  for (const auto& s : train) out.insert(s.cable_length);
  for (const auto& s : test) out.insert(s.cable_length);
  CHECK(in == out);

  const auto [train2, test2] = split_dataset(all, 0.2, 5);
  CHECK(train2 == train);
  const auto [train3, test3] = split_dataset(all, 0.2, 6);
  CHECK_FALSE(train3 == train);

  // A plane's split does not depend on which other planes are present.
  const auto [only0, rest0] = split_dataset(groups[0].samples, 0.2, 5);
  std::vector<MeasurementSample> train_plane0;
  for (const auto& s : train) {
    if (s.plane_id == 0) train_plane0.push_back(s);
  }
  CHECK(only0 == train_plane0);

  CHECK_THROWS_AS(split_dataset(all, 1.0, 5), InvalidArgument);
  CHECK_THROWS_AS(split_dataset(all, 0.0, 5), InvalidArgument);
  CHECK_THROWS_AS(split_dataset(std::vector<MeasurementSample>(groups[0].samples.begin(),
                                                               groups[0].samples.begin() + 10),
                                0.2, 5),
                  InvalidArgument);
}

TEST_CASE("run_experiment") {
  SUBCASE("one noiseless repeat with ls") {
    ExperimentConfig cfg;
    cfg.repeats = 1;
    cfg.methods = {"ls"};
    cfg.plane_subsets = {3};
    cfg.sim.noise = {0.0, 0.0, 0.0, 1};
    const auto rep = run_experiment(cfg);
    const auto* row = rep.find(3, "ls", "test");
    REQUIRE(row != nullptr);
    CHECK(row->runs_ok == 1);
    CHECK(row->rmse.mean < 1e-3);
    CHECK(row->rmse.std == 0.0);
    CHECK(rep.find(3, "before", "test") != nullptr);
    CHECK(rep.find(3, "ls", "test_cartesian")->rmse.mean < 1e-3);
    CHECK(rep.find(1, "ls", "test") == nullptr);
    int ls_runs = 0;
    for (const auto& r : rep.runs) ls_runs += r.method == "ls";
    CHECK(ls_runs == 1);
  }
  SUBCASE("repeats populate spread, reruns are identical, files are written") {
    ExperimentConfig cfg;
    cfg.repeats = 3;
    cfg.methods = {"ampc", "lm"};
    cfg.plane_subsets = {1, 3};
    cfg.draw_per_plane = 60;
    const auto rep = run_experiment(cfg);
    CHECK(rep.repeats == 3);
    for (const auto& row : rep.aggregate) {
      CHECK(row.runs_total == 3);
      CHECK_FALSE(row.partial());
      if (row.method != "before") CHECK(row.rmse.std > 0.0);
    }
    const auto again = run_experiment(cfg);
    REQUIRE(again.aggregate.size() == rep.aggregate.size());
    for (std::size_t i = 0; i < rep.aggregate.size(); ++i) {
      CHECK(again.aggregate[i].rmse.mean == rep.aggregate[i].rmse.mean);
    }
    const auto* before = rep.find(3, "before", "test");
    const auto* ampc = rep.find(3, "ampc", "test");
    REQUIRE(before != nullptr);
    REQUIRE(ampc != nullptr);
    CHECK(ampc->rmse.mean < before->rmse.mean);

    const fs::path dir = scratch_dir("report");
    write_report(dir, rep);
    const std::string txt = read_text(dir / "report.txt");
    CHECK(txt.find(" +- ") != std::string::npos);
    const std::string csv = read_text(dir / "report.csv");
    CHECK(csv.rfind("planes,repeat,method,surface", csv.find("planes,repeat")) != std::string::npos);
    fs::remove_all(dir);
  }
  SUBCASE("a failing method is recorded, not thrown") {
    ExperimentConfig cfg;
    cfg.repeats = 2;
    cfg.methods = {"lm"};
    cfg.plane_subsets = {1};
    cfg.draw_per_plane = 40;
    cfg.lm.max_iterations = 0;
    cfg.lm.mask = ParameterMask(std::bitset<kParamCount>{});
    const auto rep = run_experiment(cfg);
    const auto* row = rep.find(1, "lm", "test");
    REQUIRE(row != nullptr);
    CHECK(row->runs_total == 2);
  }
  SUBCASE("bad configurations") {
    ExperimentConfig cfg;
    cfg.methods = {"pso"};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.plane_subsets = {4};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.repeats = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.train_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  }
  SUBCASE("summary statistics") {
    const Summary s = summarize({1.0, 2.0, 3.0, 4.0});
    CHECK(s.mean == 2.5);
    CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(summarize({7.0}).std == 0.0);
  }
}

TEST_CASE("run configuration") {
  using namespace mpcal::cli;
  SUBCASE("defaults validate and the snapshot parses back to itself") {
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    const std::string snap = cfg.snapshot();
    CHECK(parse_config(snap).snapshot() == snap);
  }
  SUBCASE("values are read") {
    const auto cfg = parse_config(R"({"seed": 42, "methods": ["ampc", "ls"], "repeats": 3, "draw_per_plane": 20,
      "simulation": {"samples_per_plane": 50, "noise": {"cable_mm": 0.1}}, "ampc": {"rho": 4.0}})");
    CHECK(cfg.seed == 42);
    CHECK(cfg.methods == std::vector<std::string>{"ampc", "ls"});
    CHECK(cfg.repeats == 3);
    CHECK(cfg.samples_per_plane == 50);
    CHECK(cfg.noise.cable_sigma == 0.1);
    CHECK(cfg.ampc.defaults.rho == 4.0);
    CHECK(cfg.snapshot().find("\"seed\": 42") != std::string::npos);
    CHECK(cfg.snapshot().find("\"out\"") == std::string::npos);
  }
  SUBCASE("unknown keys, wrong types and bad values are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"sed": 1})"), InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"({"ampc": {"rh0": 1}})"), InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"({"repeats": "ten"})"), InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"({"methods": ["ampc", "pso"]})"), InvalidArgument);
    CHECK_THROWS_AS(parse_config(R"({"ampc": {"rho": -1}})"), InvalidArgument);
    CHECK_THROWS_AS(parse_config("{not json"), InvalidArgument);
  }
  SUBCASE("noise scaling and list splitting") {
    RunConfig cfg;
    apply_noise(cfg, 0.1);
    CHECK(cfg.noise.cable_sigma == 0.1);
    CHECK(cfg.noise.dial_sigma == doctest::Approx(0.02));
    apply_noise(cfg, 0.0);
    CHECK(cfg.noise.dial_sigma == 0.0);
    CHECK(split_list("ampc, mcs+ampc,,ls") == std::vector<std::string>{"ampc", "mcs+ampc", "ls"});
  }
  SUBCASE("the ground truth follows the perturbation seed") {
    RunConfig a, b;
    a.seed = 5;
    b.seed = 6;
    b.perturbation_seed = 5;
    CHECK(a.ground_truth().perturbation == b.ground_truth().perturbation);
    b.perturbation_seed.reset();
    CHECK_FALSE(a.ground_truth().perturbation == b.ground_truth().perturbation);
  }
}
