#include "mpcal/measurement.hpp"

#include <map>

namespace mpcal {

SampleGroups group_by_plane(const std::vector<MeasurementSample>& samples) {
  std::map<int, std::vector<MeasurementSample>> by_id;
  for (const auto& s : samples) by_id[s.plane_id].push_back(s);
  SampleGroups out;
  out.reserve(by_id.size());
  for (auto& [id, rows] : by_id) out.push_back({id, std::move(rows)});
  return out;
}

std::vector<MeasurementSample> flatten(const SampleGroups& groups) {
  std::vector<MeasurementSample> out;
  out.reserve(total_samples(groups));
  for (const auto& g : groups) out.insert(out.end(), g.samples.begin(), g.samples.end());
  return out;
}

std::size_t total_samples(const SampleGroups& groups) {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

}  // namespace mpcal
