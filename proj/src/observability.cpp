#include "mpcal/observability.hpp"

#include "mpcal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace mpcal {

Eigen::MatrixXd stack_jacobians(const RobotModel& model, std::span<const JointVector> configs,
                                Execution exec) {
  if (configs.empty()) throw InvalidArgument("stack_jacobians: empty configuration list");
  const auto lin = linearize_batch(model, configs, exec);
  Eigen::MatrixXd out(3 * static_cast<Eigen::Index>(configs.size()), kParamCount);
  for (std::size_t i = 0; i < lin.size(); ++i) {
    out.middleRows<3>(3 * static_cast<Eigen::Index>(i)) = lin[i].jacobian;
  }
  return out;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& jac, const ParameterMask& mask) {
  if (jac.cols() != kParamCount) throw InvalidArgument("select_columns: expected 24 columns");
  const auto cols = mask.indices();
  Eigen::MatrixXd out(jac.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = jac.col(cols[c]);
  return out;
}

std::vector<double> singular_values(const Eigen::MatrixXd& jac) {
  if (!jac.allFinite()) throw InvalidArgument("singular_values: non-finite matrix entry");
  if (jac.size() == 0) return {};
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const auto& s = svd.singularValues();
  std::vector<double> out(s.data(), s.data() + s.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

std::vector<double> singular_values_from_gram(const Eigen::MatrixXd& gram) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalFailure("eigen-decomposition of Gram matrix failed");
  std::vector<double> out(static_cast<std::size_t>(gram.rows()));
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = std::sqrt(std::max(eig.eigenvalues()(i), 0.0));
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

double observability_index(std::span<const double> sigmas, double exponent, IndexVariant variant,
                           int config_count) {
  if (!(exponent > 0.0) || !std::isfinite(exponent)) throw InvalidArgument("index exponent must be > 0");
  if (sigmas.empty()) throw InvalidArgument("observability_index: no singular values");
  if (config_count < 0) throw InvalidArgument("observability_index: negative configuration count");
  bool any_zero = false;
  for (double s : sigmas) {
    if (!std::isfinite(s) || s < 0.0) throw InvalidArgument("singular values must be finite and >= 0");
    any_zero = any_zero || s == 0.0;
  }

  if (variant == IndexVariant::InverseMean) {
    if (any_zero) return 0.0;
    double acc = 0.0;
    for (double s : sigmas) acc += std::pow(s, -exponent);
    const double mean = acc / static_cast<double>(sigmas.size());
    return std::pow(mean, -1.0 / exponent);
  }

  if (any_zero) throw SingularIndex("as-printed observability index undefined for a zero singular value");
  const double n0 = config_count > 0 ? config_count : static_cast<double>(sigmas.size());
  double acc = 0.0;
  for (double s : sigmas) acc += std::pow(1.0 / (s * s), exponent / 2.0);
  return std::pow(acc / n0, 1.0 / exponent);
}

ObservabilityReport observe(const RobotModel& model, std::span<const JointVector> configs,
                            const ParameterMask& mask, double exponent, IndexVariant variant) {
  ObservabilityReport rep;
  rep.exponent = exponent;
  rep.config_count = static_cast<int>(configs.size());
  rep.singular_values = singular_values(select_columns(stack_jacobians(model, configs), mask));
  rep.index_value = observability_index(rep.singular_values, exponent, variant, rep.config_count);
  return rep;
}

}  // namespace mpcal
