#pragma once

// Data-parallel inner loops shared by the solvers. Every kernel has an
// OpenMP path and a plain serial reference used by the tests and the
// benchmark. Parallel results do not depend on the thread count: work is cut
// into fixed-size blocks and block partials are reduced in block order.

#include "mpcal/kinematics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace mpcal {

enum class Execution { Serial, Parallel };

inline constexpr int kReductionBlock = 64;

/// Tool positions and parameter Jacobians for a batch of configurations.
std::vector<Linearization> linearize_batch(const RobotModel& model, std::span<const JointVector> joints,
                                           Execution exec = Execution::Parallel);

/// Tool positions only.
std::vector<Vector3> positions_batch(const RobotModel& model, std::span<const JointVector> joints,
                                     Execution exec = Execution::Parallel);

struct NormalEquations {
  Eigen::MatrixXd lhs;  // sum_r w_r * j_r j_r^T
  Eigen::VectorXd rhs;  // sum_r w_r * j_r * b_r
};

/// Weighted Gram accumulation over the rows of `rows` (R x n).
NormalEquations accumulate_normal_equations(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rhs,
                                            const Eigen::VectorXd& weights,
                                            Execution exec = Execution::Parallel);

/// Per-configuration Gram blocks J_i^T J_i over the selected parameter columns.
std::vector<Eigen::MatrixXd> gram_blocks(const RobotModel& model, std::span<const JointVector> joints,
                                         const ParameterMask& mask,
                                         Execution exec = Execution::Parallel);

/// Evaluates `fn` at every index in [0, count); results land in index order.
std::vector<double> evaluate_indexed(int count, const std::function<double(int)>& fn,
                                     Execution exec = Execution::Parallel);

}  // namespace mpcal
