#include "mpcal/calibration.hpp"

#include "mpcal/errors.hpp"
#include "mpcal/plane_fit.hpp"
#include "mpcal/residual_system.hpp"

namespace mpcal {

void require_groups(const SampleGroups& groups) {
  if (groups.empty()) throw InvalidArgument("calibration needs at least one plane");
  for (const auto& g : groups) {
    if (g.size() < 3) {
      throw InvalidArgument("plane " + std::to_string(g.plane_id) + " has fewer than 3 samples");
    }
  }
}

CalibrationState initial_state(const SampleGroups& groups, const RobotModel& model, const Vector3& anchor_hint) {
  require_groups(groups);
  const auto positions = group_positions(model, groups);
  CalibrationState s;
  std::vector<Vector3> all_points;
  std::vector<double> all_lengths;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    s.planes.push_back(fit_plane(positions[j]));
    for (std::size_t i = 0; i < groups[j].size(); ++i) {
      all_points.push_back(positions[j][i]);
      all_lengths.push_back(groups[j].samples[i].cable_length);
    }
  }
  s.anchor = trilaterate(all_points, all_lengths, 20, anchor_hint);
  s.multipliers.assign(groups.size(), 0.0);
  return s;
}

}  // namespace mpcal
