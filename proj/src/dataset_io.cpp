#include "mpcal/dataset_io.hpp"

#include "mpcal/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mpcal {

namespace {

std::ofstream open_out(const std::filesystem::path& path, const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& c : comments) out << "# " << c << '\n';
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::size_t line_no, const char* what) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw ParseError(std::string("bad ") + what + " value '" + std::string(field) + "'", line_no);
  }
  return v;
}

int parse_plane_id(std::string_view field, std::size_t line_no) {
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  int v = -1;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || v < 0) {
    throw ParseError("plane_id must be a non-negative integer, got '" + std::string(field) + "'", line_no);
  }
  return v;
}

// Yields (line number, content) of every non-comment, non-blank line.
template <class Fn>
void for_each_data_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    fn(line_no, std::string_view(line));
  }
}

}  // namespace

void write_samples(const std::filesystem::path& path, const std::vector<MeasurementSample>& samples,
                   const std::vector<std::string>& comments) {
  auto out = open_out(path, comments);
  out << kSampleHeader << '\n';
  for (const auto& s : samples) {
    for (int k = 0; k < kJointCount; ++k) out << fmt(rad_to_deg(s.joints(k))) << ',';
    out << fmt(s.cable_length) << ',' << fmt(s.dial_reading) << ',' << s.plane_id << '\n';
  }
  check_written(out, path);
}

std::vector<MeasurementSample> read_samples(const std::filesystem::path& path) {
  std::vector<MeasurementSample> out;
  bool header_seen = false;
  for_each_data_line(path, [&](std::size_t line_no, std::string_view line) {
    if (!header_seen) {
      if (line != kSampleHeader) {
        throw FormatError(path.string() + ": unknown header '" + std::string(line) + "'");
      }
      header_seen = true;
      return;
    }
    const auto fields = split(line);
    if (fields.size() != 9) {
      throw ParseError("expected 9 columns, got " + std::to_string(fields.size()), line_no);
    }
    MeasurementSample s;
    for (int k = 0; k < kJointCount; ++k) s.joints(k) = deg_to_rad(parse_double(fields[k], line_no, "joint"));
    s.cable_length = parse_double(fields[6], line_no, "cable_mm");
    s.dial_reading = parse_double(fields[7], line_no, "dial_mm");
    s.plane_id = parse_plane_id(fields[8], line_no);
    out.push_back(s);
  });
  if (!header_seen) throw FormatError(path.string() + ": missing header");
  return out;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth,
                        const std::string& config_snapshot) {
  nlohmann::ordered_json j;
  if (!config_snapshot.empty()) {
    // Embedded as JSON when it parses, as plain text otherwise.
    const auto parsed = nlohmann::ordered_json::parse(config_snapshot, nullptr, false);
    j["config"] = parsed.is_discarded() ? nlohmann::ordered_json(config_snapshot) : parsed;
  }
  nlohmann::ordered_json pert;
  for (int i = 0; i < kParamCount; ++i) {
    pert[param_name(i)] = is_angle_param(i) ? rad_to_deg(truth.perturbation[i]) : truth.perturbation[i];
  }
  j["perturbation_deg_mm"] = pert;
  j["anchor_mm"] = {truth.anchor.x(), truth.anchor.y(), truth.anchor.z()};
  for (const auto& p : truth.planes) {
    j["planes"].push_back({{"name", p.name},
                           {"point_mm", {p.point.x(), p.point.y(), p.point.z()}},
                           {"normal", {p.normal.x(), p.normal.y(), p.normal.z()}}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  check_written(out, path);
}

GroundTruth read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  try {
    GroundTruth t;
    for (int i = 0; i < kParamCount; ++i) {
      const double v = j.at("perturbation_deg_mm").at(param_name(i)).get<double>();
      t.perturbation[i] = is_angle_param(i) ? deg_to_rad(v) : v;
    }
    const auto a = j.at("anchor_mm").get<std::vector<double>>();
    if (a.size() != 3) throw FormatError(path.string() + ": anchor_mm needs 3 values");
    t.anchor = Vector3(a[0], a[1], a[2]);
    t.planes.clear();
    for (const auto& p : j.at("planes")) {
      const auto w = p.at("point_mm").get<std::vector<double>>();
      const auto n = p.at("normal").get<std::vector<double>>();
      if (w.size() != 3 || n.size() != 3) throw FormatError(path.string() + ": plane vectors need 3 values");
      t.planes.push_back({p.at("name").get<std::string>(), Vector3(w[0], w[1], w[2]), Vector3(n[0], n[1], n[2])});
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_parameters(const std::filesystem::path& path, const RobotModel& nominal, const CalibrationResult& result,
                      const Vector3& initial_anchor, const std::vector<std::string>& comments) {
  auto out = open_out(path, comments);
  out << "parameter,unit,nominal,calibrated,delta\n";
  const ParameterVector delta = result.model.difference(nominal);
  for (int i = 0; i < kParamCount; ++i) {
    const int joint = i % kJointCount;
    const DhLink& n = nominal.link(joint);
    const DhLink& c = result.model.link(joint);
    double nv = 0.0, cv = 0.0;
    switch (static_cast<ParamKind>(i / kJointCount)) {
      case ParamKind::Alpha: nv = n.alpha; cv = c.alpha; break;
      case ParamKind::A: nv = n.a; cv = c.a; break;
      case ParamKind::D: nv = n.d; cv = c.d; break;
      case ParamKind::Theta: nv = n.theta_offset; cv = c.theta_offset; break;
    }
    const bool angle = is_angle_param(i);
    const auto conv = [angle](double v) { return angle ? rad_to_deg(v) : v; };
    out << param_name(i) << ',' << (angle ? "deg" : "mm") << ',' << fmt(conv(nv)) << ',' << fmt(conv(cv)) << ','
        << fmt(conv(delta[i])) << '\n';
  }
  const char* axes[] = {"anchor_x", "anchor_y", "anchor_z"};
  for (int k = 0; k < 3; ++k) {
    out << axes[k] << ",mm," << fmt(initial_anchor(k)) << ',' << fmt(result.state.anchor(k)) << ','
        << fmt(result.state.anchor(k) - initial_anchor(k)) << '\n';
  }
  check_written(out, path);
}

std::map<std::string, ParameterRow> read_parameters(const std::filesystem::path& path) {
  std::map<std::string, ParameterRow> out;
  bool header_seen = false;
  for_each_data_line(path, [&](std::size_t line_no, std::string_view line) {
    if (!header_seen) {
      if (line != "parameter,unit,nominal,calibrated,delta") throw FormatError(path.string() + ": unknown header");
      header_seen = true;
      return;
    }
    const auto f = split(line);
    if (f.size() != 5) throw ParseError("expected 5 columns", line_no);
    out[std::string(f[0])] = {std::string(f[1]), parse_double(f[2], line_no, "nominal"),
                              parse_double(f[3], line_no, "calibrated"), parse_double(f[4], line_no, "delta")};
  });
  if (!header_seen) throw FormatError(path.string() + ": missing header");
  return out;
}

void write_trace(const std::filesystem::path& path, const CalibrationResult& result,
                 const std::vector<std::string>& comments) {
  auto out = open_out(path, comments);
  out << "iteration,objective,step_norm\n";
  for (std::size_t t = 0; t < result.objective_trace.size(); ++t) {
    out << t << ',' << fmt(result.objective_trace[t]) << ',';
    if (t < result.step_norms.size()) out << fmt(result.step_norms[t]);
    out << '\n';
  }
  check_written(out, path);
}

void write_selection(const std::filesystem::path& path, const SelectionResult& selection,
                     const std::vector<std::string>& comments) {
  std::vector<std::string> all = comments;
  all.push_back("index_value " + fmt(selection.index_value));
  auto out = open_out(path, all);
  out << "index\n";
  for (int i : selection.chosen_indices) out << i << '\n';
  check_written(out, path);
}

void write_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve,
                 const std::vector<std::string>& comments) {
  auto out = open_out(path, comments);
  out << "k,index_value\n";
  for (const auto& p : curve) out << p.k << ',' << fmt(p.index_value) << '\n';
  check_written(out, path);
}

}  // namespace mpcal
