#include "run_config.hpp"

#include "mpcal/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace mpcal::cli {

namespace {

using json = nlohmann::ordered_json;

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidArgument(where + ": expected an object");
  for (const auto& item : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return item.key() == a; }) ==
        allowed.end()) {
      throw InvalidArgument(where + ": unknown key '" + item.key() + "'");
    }
  }
}

template <class T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidArgument(where + "." + key + ": wrong type");
  }
}

Vector3 read_vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw InvalidArgument(where + ": expected 3 numbers");
  Vector3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) throw InvalidArgument(where + ": expected 3 numbers");
    out(i) = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

json vec3(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

DialMode dial_from(const std::string& s, const std::string& where) {
  if (s == "correction") return DialMode::Correction;
  if (s == "ignore") return DialMode::Ignore;
  throw InvalidArgument(where + ": dial must be 'correction' or 'ignore'");
}

const char* dial_name(DialMode m) { return m == DialMode::Correction ? "correction" : "ignore"; }

PlaneWeights read_weights(const json& obj, PlaneWeights w, const std::string& where) {
  read(obj, "rho", w.rho, where);
  read(obj, "lambda", w.lambda, where);
  read(obj, "eta", w.eta, where);
  return w;
}

json weights_json(const PlaneWeights& w) { return {{"rho", w.rho}, {"lambda", w.lambda}, {"eta", w.eta}}; }

void read_ampc(const json& obj, AmpcConfig& c) {
  const std::string where = "ampc";
  check_keys(obj, {"rho", "lambda", "eta", "per_plane", "max_iterations", "tolerance", "dial", "coupling",
                   "safeguard"},
             where);
  c.defaults = read_weights(obj, c.defaults, where);
  if (obj.contains("per_plane")) {
    const json& list = obj.at("per_plane");
    if (!list.is_array()) throw InvalidArgument("ampc.per_plane: expected a list");
    c.plane_weights.clear();
    for (const auto& item : list) {
      check_keys(item, {"rho", "lambda", "eta"}, "ampc.per_plane");
      c.plane_weights.push_back(read_weights(item, c.defaults, "ampc.per_plane"));
    }
  }
  read(obj, "max_iterations", c.max_outer_iterations, where);
  read(obj, "tolerance", c.convergence_tol, where);
  read(obj, "safeguard", c.safeguard, where);
  if (obj.contains("dial")) c.dial_mode = dial_from(obj.at("dial").get<std::string>(), where);
  if (obj.contains("coupling")) {
    const auto s = obj.at("coupling").get<std::string>();
    if (s == "eliminated") {
      c.coupling = PlaneCoupling::Eliminated;
    } else if (s == "fixed") {
      c.coupling = PlaneCoupling::Fixed;
    } else {
      throw InvalidArgument("ampc.coupling must be 'eliminated' or 'fixed'");
    }
  }
}

template <class C>
void read_baseline_common(const json& obj, C& c, const std::string& where) {
  read(obj, "max_iterations", c.max_iterations, where);
  read(obj, "tolerance", c.relative_tol, where);
  read(obj, "plane_weight", c.plane_weight, where);
  read(obj, "project_planes", c.project_planes, where);
  if (obj.contains("dial")) c.dial_mode = dial_from(obj.at("dial").get<std::string>(), where);
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

void apply_noise(RunConfig& cfg, double cable_mm) {
  const NoiseSpec defaults;
  cfg.noise.cable_sigma = cable_mm;
  cfg.noise.dial_sigma = cable_mm * defaults.dial_sigma / defaults.cable_sigma;
}

RunConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, {"seed", "out", "samples", "truth", "methods", "planes", "plane_subsets", "repeats", "k", "curve",
                    "pool_per_plane", "draw_per_plane", "train_fraction", "simulation", "ampc", "lm", "ls", "mcs"},
             "config");
  RunConfig c;
  const std::string where = "config";
  read(root, "seed", c.seed, where);
  if (root.contains("out")) c.out = root.at("out").get<std::string>();
  if (root.contains("samples")) {
    std::vector<std::string> files;
    read(root, "samples", files, where);
    c.samples.assign(files.begin(), files.end());
  }
  if (root.contains("truth")) c.truth = root.at("truth").get<std::string>();
  read(root, "methods", c.methods, where);
  read(root, "planes", c.planes, where);
  read(root, "plane_subsets", c.plane_subsets, where);
  read(root, "repeats", c.repeats, where);
  read(root, "k", c.k, where);
  read(root, "curve", c.curve, where);
  read(root, "pool_per_plane", c.pool_per_plane, where);
  read(root, "draw_per_plane", c.draw_per_plane, where);
  read(root, "train_fraction", c.train_fraction, where);

  if (root.contains("simulation")) {
    const json& s = root.at("simulation");
    const std::string w = "simulation";
    check_keys(s, {"samples_per_plane", "perturbation_seed", "angle_cap_deg", "length_cap_mm", "anchor_mm", "planes",
                   "region_mm", "noise"},
               w);
    read(s, "samples_per_plane", c.samples_per_plane, w);
    if (s.contains("perturbation_seed")) {
      std::uint64_t v = 0;
      read(s, "perturbation_seed", v, w);
      c.perturbation_seed = v;
    }
    read(s, "angle_cap_deg", c.angle_cap_deg, w);
    read(s, "length_cap_mm", c.length_cap_mm, w);
    if (s.contains("anchor_mm")) c.anchor = read_vec3(s.at("anchor_mm"), "simulation.anchor_mm");
    if (s.contains("planes")) {
      if (!s.at("planes").is_array()) throw InvalidArgument("simulation.planes: expected a list");
      c.plane_specs.clear();
      for (const auto& p : s.at("planes")) {
        check_keys(p, {"name", "point_mm", "normal"}, "simulation.planes");
        PlaneSpec spec;
        read(p, "name", spec.name, "simulation.planes");
        if (!p.contains("point_mm") || !p.contains("normal")) {
          throw InvalidArgument("simulation.planes: point_mm and normal are required");
        }
        spec.point = read_vec3(p.at("point_mm"), "simulation.planes.point_mm");
        spec.normal = read_vec3(p.at("normal"), "simulation.planes.normal");
        if (!(spec.normal.norm() > 0.0)) throw InvalidArgument("simulation.planes.normal: zero vector");
        spec.normal.normalize();
        c.plane_specs.push_back(spec);
      }
    }
    if (s.contains("region_mm")) {
      std::vector<double> r;
      read(s, "region_mm", r, w);
      if (r.size() != 2) throw InvalidArgument("simulation.region_mm: expected [width, height]");
      c.region = {r[0], r[1]};
    }
    if (s.contains("noise")) {
      const json& n = s.at("noise");
      check_keys(n, {"cable_mm", "dial_mm", "joint_deg"}, "simulation.noise");
      read(n, "cable_mm", c.noise.cable_sigma, "simulation.noise");
      read(n, "dial_mm", c.noise.dial_sigma, "simulation.noise");
      double joint_deg = rad_to_deg(c.noise.joint_sigma);
      read(n, "joint_deg", joint_deg, "simulation.noise");
      c.noise.joint_sigma = deg_to_rad(joint_deg);
    }
  }

  if (root.contains("ampc")) read_ampc(root.at("ampc"), c.ampc);
  if (root.contains("lm")) {
    const json& o = root.at("lm");
    check_keys(o, {"initial_damping", "max_iterations", "tolerance", "plane_weight", "project_planes", "dial"}, "lm");
    read(o, "initial_damping", c.lm.initial_damping, "lm");
    read_baseline_common(o, c.lm, "lm");
  }
  if (root.contains("ls")) {
    const json& o = root.at("ls");
    check_keys(o, {"ridge", "max_iterations", "tolerance", "plane_weight", "project_planes", "dial"}, "ls");
    read(o, "ridge", c.ls.ridge, "ls");
    read_baseline_common(o, c.ls, "ls");
  }
  if (root.contains("mcs")) {
    const json& o = root.at("mcs");
    check_keys(o, {"population", "generations", "F", "CR", "stall", "seed", "exponent"}, "mcs");
    read(o, "population", c.mcs.de.population_size, "mcs");
    read(o, "generations", c.mcs.de.max_generations, "mcs");
    read(o, "F", c.mcs.de.differential_weight, "mcs");
    read(o, "CR", c.mcs.de.crossover_rate, "mcs");
    read(o, "stall", c.mcs.de.stall_generations, "mcs");
    read(o, "seed", c.mcs.de.seed, "mcs");
    read(o, "exponent", c.mcs.exponent, "mcs");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void RunConfig::validate() const {
  if (planes < 1) throw InvalidArgument("planes must be >= 1");
  if (pool_per_plane < 0) throw InvalidArgument("pool_per_plane must be >= 0");
  if (samples_per_plane < 3) throw InvalidArgument("samples_per_plane must be >= 3");
  if (!(angle_cap_deg >= 0.0) || !(length_cap_mm >= 0.0)) throw InvalidArgument("perturbation caps must be >= 0");
  if (plane_specs.empty()) throw InvalidArgument("simulation.planes must not be empty");
  if (!(region.width >= 0.0) || !(region.height >= 0.0)) throw InvalidArgument("region_mm must be >= 0");
  if (!std::is_sorted(curve.begin(), curve.end())) throw InvalidArgument("curve K values must be ascending");
  for (int kv : curve) {
    if (kv < 1) throw InvalidArgument("curve K values must be >= 1");
  }
  noise.validate();
  ampc.validate(ampc.plane_weights.empty() ? 1 : static_cast<int>(ampc.plane_weights.size()));
  if (lm.max_iterations < 1 || ls.max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
  if (!(lm.plane_weight > 0.0) || !(ls.plane_weight > 0.0)) throw InvalidArgument("plane_weight must be > 0");
  if (!(mcs.exponent > 0.0)) throw InvalidArgument("mcs.exponent must be > 0");
  experiment().validate();
}

GroundTruth RunConfig::ground_truth() const { return experiment().sim.truth(); }

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  e.sample_files = samples;
  e.sim.caps.angle = deg_to_rad(angle_cap_deg);
  e.sim.caps.length = length_cap_mm;
  e.sim.truth_seed = perturbation_seed.value_or(seed);
  e.sim.noise = noise;
  e.sim.noise.seed = seed;
  e.sim.dataset.samples_per_plane = samples_per_plane;
  e.sim.dataset.region = region;
  e.sim.planes = plane_specs;
  e.sim.anchor = anchor;
  e.draw_per_plane = draw_per_plane;
  e.train_fraction = train_fraction;
  e.methods = methods;
  e.plane_subsets = plane_subsets;
  e.repeats = repeats;
  e.seed = seed;
  e.k = k;
  e.ampc = ampc;
  e.lm = lm;
  e.ls = ls;
  e.mcs = mcs;
  e.snapshot = snapshot();
  return e;
}

std::string RunConfig::snapshot() const {
  json j;
  j["seed"] = seed;
  json files = json::array();
  for (const auto& f : samples) files.push_back(f.string());
  j["samples"] = files;
  if (truth) j["truth"] = truth->string();
  j["methods"] = methods;
  j["planes"] = planes;
  j["plane_subsets"] = plane_subsets;
  j["repeats"] = repeats;
  j["k"] = k;
  j["curve"] = curve;
  j["pool_per_plane"] = pool_per_plane;
  j["draw_per_plane"] = draw_per_plane;
  j["train_fraction"] = train_fraction;

  json sim;
  sim["samples_per_plane"] = samples_per_plane;
  sim["perturbation_seed"] = perturbation_seed.value_or(seed);
  sim["angle_cap_deg"] = angle_cap_deg;
  sim["length_cap_mm"] = length_cap_mm;
  sim["anchor_mm"] = vec3(anchor);
  json planes_j = json::array();
  for (const auto& p : plane_specs) planes_j.push_back({{"name", p.name}, {"point_mm", vec3(p.point)}, {"normal", vec3(p.normal)}});
  sim["planes"] = planes_j;
  sim["region_mm"] = json::array({region.width, region.height});
  sim["noise"] = {{"cable_mm", noise.cable_sigma}, {"dial_mm", noise.dial_sigma},
                  {"joint_deg", rad_to_deg(noise.joint_sigma)}};
  j["simulation"] = sim;

  json a = weights_json(ampc.defaults);
  if (!ampc.plane_weights.empty()) {
    json pw = json::array();
    for (const auto& w : ampc.plane_weights) pw.push_back(weights_json(w));
    a["per_plane"] = pw;
  }
  a["max_iterations"] = ampc.max_outer_iterations;
  a["tolerance"] = ampc.convergence_tol;
  a["dial"] = dial_name(ampc.dial_mode);
  a["coupling"] = ampc.coupling == PlaneCoupling::Eliminated ? "eliminated" : "fixed";
  a["safeguard"] = ampc.safeguard;
  j["ampc"] = a;
  j["lm"] = {{"initial_damping", lm.initial_damping}, {"max_iterations", lm.max_iterations},
             {"tolerance", lm.relative_tol},          {"plane_weight", lm.plane_weight},
             {"project_planes", lm.project_planes},   {"dial", dial_name(lm.dial_mode)}};
  j["ls"] = {{"ridge", ls.ridge},           {"max_iterations", ls.max_iterations},
             {"tolerance", ls.relative_tol}, {"plane_weight", ls.plane_weight},
             {"project_planes", ls.project_planes}, {"dial", dial_name(ls.dial_mode)}};
  j["mcs"] = {{"population", mcs.de.population_size}, {"generations", mcs.de.max_generations},
              {"F", mcs.de.differential_weight},      {"CR", mcs.de.crossover_rate},
              {"stall", mcs.de.stall_generations},    {"seed", mcs.de.seed},
              {"exponent", mcs.exponent}};
  return j.dump(2);
}

}  // namespace mpcal::cli
