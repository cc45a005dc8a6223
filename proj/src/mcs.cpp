#include "mpcal/mcs.hpp"

#include "mpcal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mpcal {

std::vector<int> decode_subset(std::span<const double> genes, int pool_size) {
  const int k = static_cast<int>(genes.size());
  if (k > pool_size) throw InvalidArgument("decode_subset: more genes than pool entries");
  std::vector<char> used(static_cast<std::size_t>(pool_size), 0);
  std::vector<int> out;
  out.reserve(genes.size());
  for (double g : genes) {
    int idx = std::isfinite(g) ? static_cast<int>(std::floor(std::clamp(g, 0.0, double(pool_size - 1)))) : 0;
    while (used[static_cast<std::size_t>(idx)]) idx = (idx + 1) % pool_size;
    used[static_cast<std::size_t>(idx)] = 1;
    out.push_back(idx);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double subset_index(std::span<const Eigen::MatrixXd> grams, std::span<const int> subset, double exponent) {
  if (subset.empty() || grams.empty()) throw InvalidArgument("subset_index: empty subset");
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(grams[0].rows(), grams[0].cols());
  for (int i : subset) acc += grams[static_cast<std::size_t>(i)];
  const auto sig = singular_values_from_gram(acc);
  return observability_index(sig, exponent, IndexVariant::InverseMean);
}

SelectionResult select_configurations(const RobotModel& model, std::span<const JointVector> pool, int k,
                                      const McsOptions& opts) {
  const int n = static_cast<int>(pool.size());
  if (k <= 0) throw InvalidArgument("select_configurations: K must be positive");
  if (k > n) throw InvalidArgument("select_configurations: K exceeds pool size");
  opts.de.validate();

  const auto grams = gram_blocks(model, pool, opts.mask, opts.exec);
  SelectionResult res;
  if (k == n) {
    res.chosen_indices.resize(static_cast<std::size_t>(n));
    std::iota(res.chosen_indices.begin(), res.chosen_indices.end(), 0);
    res.index_value = subset_index(grams, res.chosen_indices, opts.exponent);
    res.history = {res.index_value};
    res.final_population_values = {res.index_value};
    return res;
  }

  std::vector<Bound> bounds(static_cast<std::size_t>(k), Bound{0.0, static_cast<double>(n)});
  auto fitness = [&](const Eigen::VectorXd& genes) {
    const auto subset = decode_subset(std::span<const double>(genes.data(), genes.size()), n);
    return subset_index(grams, subset, opts.exponent);
  };
  const DeResult de = de_optimize(fitness, bounds, opts.de, opts.exec);

  res.chosen_indices = decode_subset(std::span<const double>(de.best.data(), de.best.size()), n);
  res.index_value = de.best_value;
  res.generations_used = de.generations_used;
  res.history = de.history;
  res.final_population_values = de.final_population_values;
  return res;
}

std::vector<CurvePoint> observability_curve(const RobotModel& model, std::span<const JointVector> pool,
                                            std::span<const int> k_values, const McsOptions& opts) {
  if (!std::is_sorted(k_values.begin(), k_values.end())) {
    throw InvalidArgument("observability_curve: K values must be ascending");
  }
  std::vector<CurvePoint> curve;
  curve.reserve(k_values.size());
  for (int k : k_values) {
    curve.push_back({k, select_configurations(model, pool, k, opts).index_value});
  }
  return curve;
}

}  // namespace mpcal
