#pragma once

#include "mpcal/kernels.hpp"
#include "mpcal/kinematics.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace mpcal {

/// Vertical stack [J_1; J_2; ...; J_N] of per-configuration position Jacobians.
/// (3N x 24). Throws InvalidArgument for an empty configuration list.
Eigen::MatrixXd stack_jacobians(const RobotModel& model, std::span<const JointVector> configs,
                                Execution exec = Execution::Parallel);

/// Keeps only the columns enabled in `mask`, in index order.
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& jac, const ParameterMask& mask);

/// Singular values, descending. Throws InvalidArgument on non-finite input.
std::vector<double> singular_values(const Eigen::MatrixXd& jac);

/// Singular values of J recovered from the Gram matrix J^T J (eigenvalues,
/// clamped at zero, square-rooted), descending.
std::vector<double> singular_values_from_gram(const Eigen::MatrixXd& gram);

enum class IndexVariant {
  /// [ (1/m) * sum sigma^-V ]^(-1/V): larger means better conditioned.
  InverseMean,
  /// [ (1/N0) * sum (1/sigma^2)^(V/2) ]^(1/V), literal typeset form.
  AsPrinted,
};

inline constexpr double kDefaultIndexExponent = 2.0;

/**
 * Observability index of a singular-value list.
 *
 * `config_count` is the N0 divisor of the AsPrinted form; 0 means "use the
 * number of singular values". InverseMean returns 0 when any sigma is 0;
 * AsPrinted throws SingularIndex in that case.
 */
double observability_index(std::span<const double> sigmas, double exponent = kDefaultIndexExponent,
                           IndexVariant variant = IndexVariant::InverseMean, int config_count = 0);

struct ObservabilityReport {
  std::vector<double> singular_values;
  double index_value = 0.0;
  double exponent = kDefaultIndexExponent;
  int config_count = 0;
};

/// Stacks, restricts to `mask` columns, and evaluates the index.
ObservabilityReport observe(const RobotModel& model, std::span<const JointVector> configs,
                            const ParameterMask& mask = ParameterMask::observable(),
                            double exponent = kDefaultIndexExponent,
                            IndexVariant variant = IndexVariant::InverseMean);

}  // namespace mpcal
