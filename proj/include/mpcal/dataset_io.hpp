#pragma once

// Text formats. Every file is comma-separated UTF-8 with LF line ends. Lines
// starting with '#' carry provenance (the run configuration) and are skipped
// by the readers.

#include "mpcal/calibration.hpp"
#include "mpcal/mcs.hpp"
#include "mpcal/measurement.hpp"
#include "mpcal/simulator.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mpcal {

inline constexpr const char* kSampleHeader = "j1_deg,j2_deg,j3_deg,j4_deg,j5_deg,j6_deg,cable_mm,dial_mm,plane_id";

/// Throws std::runtime_error when the file cannot be written.
void write_samples(const std::filesystem::path& path, const std::vector<MeasurementSample>& samples,
                   const std::vector<std::string>& comments = {});

/// Throws FormatError on a missing or unknown header and ParseError (with
/// the 1-based line number) on a malformed row.
std::vector<MeasurementSample> read_samples(const std::filesystem::path& path);

/// JSON sidecar: perturbation (degrees / mm, by parameter name), anchor, planes.
void write_ground_truth(const std::filesystem::path& path, const GroundTruth& truth,
                        const std::string& config_snapshot = {});
GroundTruth read_ground_truth(const std::filesystem::path& path);

/// Calibrated parameters, one row per D-H parameter plus the anchor:
/// parameter,unit,nominal,calibrated,delta (angles in degrees).
void write_parameters(const std::filesystem::path& path, const RobotModel& nominal, const CalibrationResult& result,
                      const Vector3& initial_anchor, const std::vector<std::string>& comments = {});

struct ParameterRow {
  std::string unit;
  double nominal = 0.0;
  double calibrated = 0.0;
  double delta = 0.0;
};
std::map<std::string, ParameterRow> read_parameters(const std::filesystem::path& path);

/// iteration,objective,step_norm
void write_trace(const std::filesystem::path& path, const CalibrationResult& result,
                 const std::vector<std::string>& comments = {});

/// One selected pool index per row under the header "index".
void write_selection(const std::filesystem::path& path, const SelectionResult& selection,
                     const std::vector<std::string>& comments = {});

/// k,index_value
void write_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve,
                 const std::vector<std::string>& comments = {});

}  // namespace mpcal
