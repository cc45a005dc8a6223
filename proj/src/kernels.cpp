#include "mpcal/kernels.hpp"

#include "mpcal/errors.hpp"

namespace mpcal {

std::vector<Linearization> linearize_batch(const RobotModel& model, std::span<const JointVector> joints,
                                           Execution exec) {
  const int n = static_cast<int>(joints.size());
  std::vector<Linearization> out(joints.size());
  if (exec == Execution::Serial) {
    for (int i = 0; i < n; ++i) out[i] = linearize(model, joints[i]);
    return out;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    out[i] = linearize(model, joints[i]);
  }
  return out;
}

std::vector<Vector3> positions_batch(const RobotModel& model, std::span<const JointVector> joints,
                                     Execution exec) {
  const int n = static_cast<int>(joints.size());
  std::vector<Vector3> out(joints.size());
  if (exec == Execution::Serial) {
    for (int i = 0; i < n; ++i) out[i] = tool_position(model, joints[i]);
    return out;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    out[i] = tool_position(model, joints[i]);
  }
  return out;
}

NormalEquations accumulate_normal_equations(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rhs,
                                            const Eigen::VectorXd& weights, Execution exec) {
  const Eigen::Index r = rows.rows();
  const Eigen::Index n = rows.cols();
  if (rhs.size() != r || weights.size() != r) {
    throw InvalidArgument("normal equations: row count mismatch");
  }
  NormalEquations ne{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};

  if (exec == Execution::Serial) {
    for (Eigen::Index i = 0; i < r; ++i) {
      const auto row = rows.row(i);
      ne.lhs.noalias() += weights(i) * row.transpose() * row;
      ne.rhs.noalias() += (weights(i) * rhs(i)) * row.transpose();
    }
    return ne;
  }

  const int blocks = static_cast<int>((r + kReductionBlock - 1) / kReductionBlock);
  std::vector<Eigen::MatrixXd> lhs_parts(static_cast<std::size_t>(blocks));
  std::vector<Eigen::VectorXd> rhs_parts(static_cast<std::size_t>(blocks));
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * kReductionBlock;
    const Eigen::Index len = std::min<Eigen::Index>(kReductionBlock, r - begin);
    const auto blk = rows.middleRows(begin, len);
    const auto w = weights.segment(begin, len);
    lhs_parts[b] = blk.transpose() * w.asDiagonal() * blk;
    rhs_parts[b] = blk.transpose() * (w.array() * rhs.segment(begin, len).array()).matrix();
  }
  for (int b = 0; b < blocks; ++b) {
    ne.lhs += lhs_parts[b];
    ne.rhs += rhs_parts[b];
  }
  return ne;
}

std::vector<Eigen::MatrixXd> gram_blocks(const RobotModel& model, std::span<const JointVector> joints,
                                         const ParameterMask& mask, Execution exec) {
  const std::vector<int> cols = mask.indices();
  const int m = static_cast<int>(cols.size());
  const int n = static_cast<int>(joints.size());
  std::vector<Eigen::MatrixXd> out(joints.size());
  auto one = [&](int i) {
    const PositionJacobian full = position_jacobian(model, joints[i]);
    Eigen::Matrix<double, 3, Eigen::Dynamic> sel(3, m);
    for (int c = 0; c < m; ++c) sel.col(c) = full.col(cols[static_cast<std::size_t>(c)]);
    out[i] = sel.transpose() * sel;
  };
  if (exec == Execution::Serial) {
    for (int i = 0; i < n; ++i) one(i);
    return out;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) one(i);
  return out;
}

std::vector<double> evaluate_indexed(int count, const std::function<double(int)>& fn, Execution exec) {
  std::vector<double> out(static_cast<std::size_t>(std::max(count, 0)));
  if (exec == Execution::Serial) {
    for (int i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    out[i] = fn(i);
  }
  return out;
}

}  // namespace mpcal
