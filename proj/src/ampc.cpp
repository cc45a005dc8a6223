#include "mpcal/ampc.hpp"

#include "mpcal/errors.hpp"
#include "mpcal/plane_fit.hpp"

#include <chrono>
#include <cmath>

namespace mpcal {

namespace {

Vector3 solve3(const Matrix3& m, const Vector3& rhs, int iteration, const char* what) {
  const Eigen::FullPivLU<Matrix3> lu(m);
  if (lu.rank() < 3) throw NumericalFailure(std::string(what) + ": singular 3x3 system", iteration);
  const Vector3 x = lu.solve(rhs);
  if (!x.allFinite()) throw NumericalFailure(std::string(what) + ": non-finite solution", iteration);
  return x;
}

double mean_lambda(const AmpcConfig& cfg, int n_planes) {
  double acc = 0.0;
  for (int j = 0; j < n_planes; ++j) acc += cfg.weights(j).lambda;
  return acc / n_planes;
}

double objective_from(const ResidualSystem& sys, const CalibrationState& state, const AmpcConfig& cfg) {
  const double m = sys.length_rows;
  double lengths = sys.residual.head(sys.length_rows).squaredNorm();
  double linear = 0.0, penalty = 0.0;
  for (std::size_t j = 0; j < sys.plane_values.size(); ++j) {
    const PlaneWeights w = cfg.weights(static_cast<int>(j));
    for (double phi : sys.plane_values[j]) {
      linear += state.multipliers[j] * phi;
      penalty += w.rho * phi * phi;
    }
  }
  return lengths / (2.0 * m) + linear / m + penalty / (2.0 * m);
}

// Length rows plus penalized plane rows, without the multiplier term.
double data_cost(const ResidualSystem& sys, const AmpcConfig& cfg) {
  double cost = sys.residual.head(sys.length_rows).squaredNorm();
  for (std::size_t j = 0; j < sys.plane_values.size(); ++j) {
    const double rho = cfg.weights(static_cast<int>(j)).rho;
    for (double phi : sys.plane_values[j]) cost += rho * phi * phi;
  }
  return cost;
}

constexpr double kMinExtraLambda = 1e-4;
constexpr double kMaxExtraLambda = 1e8;
// ADMM is not monotone (early iterations can raise the cost severalfold);
// only a blow-up counts as a failed iteration.
constexpr double kGuardRatio = 10.0;
constexpr double kGuardFloor = 1e-18;  // per sample, below any noise

AmpcConfig with_extra_lambda(const AmpcConfig& cfg, double extra) {
  AmpcConfig out = cfg;
  out.defaults.lambda += extra;
  for (auto& w : out.plane_weights) w.lambda += extra;
  return out;
}

}  // namespace

PlaneWeights AmpcConfig::weights(int plane) const {
  if (plane_weights.empty()) return defaults;
  return plane_weights.at(static_cast<std::size_t>(plane));
}

void AmpcConfig::validate(int n_planes) const {
  if (n_planes < 1) throw InvalidArgument("AMPC needs at least one plane");
  if (!plane_weights.empty() && static_cast<int>(plane_weights.size()) != n_planes) {
    throw InvalidArgument("AMPC: per-plane weight count does not match the plane count");
  }
  for (int j = 0; j < n_planes; ++j) {
    const PlaneWeights w = weights(j);
    if (!(w.rho > 0.0)) throw InvalidArgument("AMPC: rho must be > 0");
    if (!(w.lambda >= 0.0)) throw InvalidArgument("AMPC: lambda must be >= 0");
    if (!(w.eta > 0.0)) throw InvalidArgument("AMPC: eta must be > 0");
  }
  if (max_outer_iterations < 1) throw InvalidArgument("AMPC: max_outer_iterations must be >= 1");
  if (!(convergence_tol >= 0.0)) throw InvalidArgument("AMPC: convergence_tol must be >= 0");
}

std::vector<PlaneSamples> plane_samples(const std::vector<std::vector<Vector3>>& positions,
                                        const SampleGroups& groups, DialMode mode) {
  std::vector<PlaneSamples> out(groups.size());
  for (std::size_t j = 0; j < groups.size(); ++j) {
    out[j].positions = positions[j];
    out[j].dial.resize(groups[j].size());
    for (std::size_t i = 0; i < groups[j].size(); ++i) {
      out[j].dial[i] = mode == DialMode::Correction ? groups[j].samples[i].dial_reading : 0.0;
    }
  }
  return out;
}

Vector3 update_plane_point(const CalibrationState& state, const PlaneSamples& samples, const AmpcConfig& cfg,
                           int plane) {
  const PlaneEstimate& pl = state.planes.at(static_cast<std::size_t>(plane));
  const PlaneWeights w = cfg.weights(plane);
  const double gamma_mult = state.multipliers.at(static_cast<std::size_t>(plane));
  const std::size_t n = samples.positions.size();
  if (n == 0) throw InvalidArgument("update_plane_point: empty plane group");

  // dPhi/dW = -normal for every sample.
  const Vector3 grad_w = -pl.normal;
  Matrix3 lhs = w.rho * grad_w * grad_w.transpose() + w.lambda * Matrix3::Identity();
  Vector3 rhs = Vector3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double phi = pl.normal.dot(samples.positions[i] - pl.point) - samples.dial[i];
    rhs += (w.rho * phi + gamma_mult) * grad_w;
  }
  rhs /= static_cast<double>(n);
  return pl.point - solve3(lhs, rhs, state.iteration, "plane point update");
}

Vector3 update_plane_normal(const CalibrationState& state, const PlaneSamples& samples, const AmpcConfig& cfg,
                            int plane) {
  const PlaneEstimate& pl = state.planes.at(static_cast<std::size_t>(plane));
  const PlaneWeights w = cfg.weights(plane);
  const double gamma_mult = state.multipliers.at(static_cast<std::size_t>(plane));
  const std::size_t n = samples.positions.size();
  if (n == 0) throw InvalidArgument("update_plane_normal: empty plane group");

  // dPhi/dgamma = p - W.
  Matrix3 scatter = Matrix3::Zero();
  Vector3 rhs = Vector3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vector3 g = samples.positions[i] - pl.point;
    const double phi = pl.normal.dot(g) - samples.dial[i];
    scatter.noalias() += g * g.transpose();
    rhs += (w.rho * phi + gamma_mult) * g;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const Matrix3 lhs = (w.rho * inv_n) * scatter + w.lambda * Matrix3::Identity();
  const Vector3 next = pl.normal - solve3(lhs, rhs * inv_n, state.iteration, "plane normal update");
  const double len = next.norm();
  if (!(len > 1e-300) || !std::isfinite(len)) {
    throw NumericalFailure("plane normal update collapsed", state.iteration);
  }
  // The unconstrained step may land in the opposite hemisphere; the normal
  // keeps its orientation so the signed dial correction stays meaningful.
  return next.dot(pl.normal) < 0.0 ? Vector3(-next / len) : Vector3(next / len);
}

ParameterStep update_parameters(const CalibrationState& state, const ResidualSystem& sys, const AmpcConfig& cfg) {
  const int n_planes = static_cast<int>(state.planes.size());
  const auto cols = unknown_columns(cfg.mask);
  const int k = static_cast<int>(cols.size());
  const int rows = sys.rows();

  Eigen::MatrixXd a(rows, k);
  for (int c = 0; c < k; ++c) a.col(c) = sys.jacobian.col(cols[static_cast<std::size_t>(c)]);
  Eigen::VectorXd weights(rows);
  for (int r = 0; r < rows; ++r) {
    weights(r) = r < sys.length_rows ? 1.0 : cfg.weights(sys.row_group[static_cast<std::size_t>(r)]).rho;
  }
  NormalEquations ne = accumulate_normal_equations(a, -sys.residual, weights, cfg.exec);
  for (int r = sys.length_rows; r < rows; ++r) {
    const double mult = state.multipliers[static_cast<std::size_t>(sys.row_group[static_cast<std::size_t>(r)])];
    if (mult != 0.0) ne.rhs.noalias() -= mult * a.row(r).transpose();
  }
  const double inv_m = 1.0 / static_cast<double>(sys.length_rows);
  Eigen::MatrixXd lhs = ne.lhs * inv_m;
  lhs.diagonal().array() += mean_lambda(cfg, n_planes);
  Eigen::VectorXd rhs = ne.rhs * inv_m;

  struct PlaneBlock {
    Eigen::LDLT<Matrix3> ldlt;
    Eigen::MatrixXd hyz;
    Vector3 gy;
    Vector3 tu, tv;
  };
  std::vector<PlaneBlock> blocks;
  if (cfg.coupling == PlaneCoupling::Eliminated) {
    // Plane step y_j: offset along the normal and two tilts of the normal,
    // the only plane motions the plane rows respect. Schur complement of the
    // 3x3 plane blocks.
    int r = sys.length_rows;
    for (int j = 0; j < n_planes; ++j) {
      const PlaneWeights w = cfg.weights(j);
      const PlaneEstimate& pl = state.planes[static_cast<std::size_t>(j)];
      const auto& pos = sys.positions[static_cast<std::size_t>(j)];
      const int nj = static_cast<int>(pos.size());
      const auto [tu, tv] = plane_basis(pl.normal);
      Eigen::MatrixXd b(nj, 3);
      for (int i = 0; i < nj; ++i) {
        const Vector3 g = pos[static_cast<std::size_t>(i)] - pl.point;
        b(i, 0) = -1.0;
        b(i, 1) = tu.dot(g);
        b(i, 2) = tv.dot(g);
      }
      const Eigen::VectorXd drive = (w.rho * sys.residual.segment(r, nj)).array() +
                                    state.multipliers[static_cast<std::size_t>(j)];
      Matrix3 hyy = (w.rho * inv_m) * (b.transpose() * b);
      hyy.diagonal().array() += w.lambda;
      const Eigen::MatrixXd hyz = (w.rho * inv_m) * (b.transpose() * a.middleRows(r, nj));
      const Vector3 gy = inv_m * (b.transpose() * drive);
      const Eigen::LDLT<Matrix3> plane_ldlt(hyy);
      if (plane_ldlt.info() != Eigen::Success || !(plane_ldlt.vectorD().minCoeff() > 0.0)) {
        throw NumericalFailure("parameter update: plane block not positive definite", state.iteration);
      }
      lhs.noalias() -= hyz.transpose() * plane_ldlt.solve(hyz);
      rhs.noalias() += hyz.transpose() * plane_ldlt.solve(gy);
      blocks.push_back({plane_ldlt, hyz, gy, tu, tv});
      r += nj;
    }
  }

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericalFailure("parameter update: normal matrix not positive definite", state.iteration);
  }
  const Eigen::VectorXd step = ldlt.solve(rhs);
  const double min_pivot = ldlt.vectorD().minCoeff();
  if (!step.allFinite() || !(min_pivot > 1e-14 * ldlt.vectorD().maxCoeff())) {
    throw NumericalFailure("parameter update: rank-deficient normal matrix", state.iteration);
  }

  ParameterStep out;
  ParameterVector du;
  Vector3 da;
  scatter_step(step, cfg.mask, du, da);
  out.u = state.u + du;
  out.anchor = state.anchor + da;
  out.step_norm = step.norm();
  out.planes = state.planes;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const PlaneBlock& pb = blocks[j];
    const Vector3 y = pb.ldlt.solve(-pb.gy - pb.hyz * step);
    PlaneEstimate& pl = out.planes[j];
    pl.point += y(0) * pl.normal;
    pl.normal = (pl.normal + y(1) * pb.tu + y(2) * pb.tv).normalized();
  }
  return out;
}

ParameterStep update_parameters(const CalibrationState& state, const SampleGroups& groups,
                                const RobotModel& initial_model, const AmpcConfig& cfg) {
  const ResidualSystem sys = build_residual_system(initial_model.applied(state.u), state.anchor, state.planes,
                                                   groups, cfg.dial_mode, cfg.exec);
  return update_parameters(state, sys, cfg);
}

std::vector<double> update_multipliers(const CalibrationState& state, std::span<const PlaneSamples> samples,
                                       const AmpcConfig& cfg) {
  std::vector<double> out = state.multipliers;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const PlaneWeights w = cfg.weights(static_cast<int>(j));
    const PlaneEstimate& pl = state.planes[j];
    double sum = 0.0;
    for (std::size_t i = 0; i < samples[j].positions.size(); ++i) {
      sum += pl.normal.dot(samples[j].positions[i] - pl.point) - samples[j].dial[i];
    }
    const double n = static_cast<double>(samples[j].positions.size());
    out[j] += w.eta * w.rho / n * sum;
  }
  return out;
}

double augmented_lagrangian(const CalibrationState& state, const SampleGroups& groups,
                            const RobotModel& initial_model, const AmpcConfig& cfg) {
  require_groups(groups);
  cfg.validate(static_cast<int>(groups.size()));
  const ResidualSystem sys = build_residual_system(initial_model.applied(state.u), state.anchor, state.planes,
                                                   groups, cfg.dial_mode, cfg.exec);
  return objective_from(sys, state, cfg);
}

CalibrationResult calibrate_ampc(const SampleGroups& groups, const RobotModel& initial_model,
                                 const AmpcConfig& cfg) {
  require_groups(groups);
  return calibrate_ampc(groups, initial_model, initial_state(groups, initial_model, cfg.anchor_hint), cfg);
}

CalibrationResult calibrate_ampc(const SampleGroups& groups, const RobotModel& initial_model,
                                 CalibrationState state, const AmpcConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  require_groups(groups);
  const int n_planes = static_cast<int>(groups.size());
  cfg.validate(n_planes);
  if (static_cast<int>(state.planes.size()) != n_planes || static_cast<int>(state.multipliers.size()) != n_planes) {
    throw InvalidArgument("AMPC: state plane/multiplier count does not match the sample groups");
  }

  CalibrationResult res;
  res.method = "ampc";
  double extra = 0.0;  // proximal weight added by the safeguard
  ResidualSystem sys = build_residual_system(initial_model.applied(state.u), state.anchor, state.planes, groups,
                                             cfg.dial_mode, cfg.exec);
  for (int t = 0; t < cfg.max_outer_iterations; ++t) {
    state.iteration = t;
    res.objective_trace.push_back(objective_from(sys, state, cfg));
    const double data_before = data_cost(sys, cfg);

    const auto samples = plane_samples(sys.positions, groups, cfg.dial_mode);
    ParameterStep step;
    ResidualSystem next;
    for (;;) {
      const AmpcConfig trial_cfg = extra > 0.0 ? with_extra_lambda(cfg, extra) : cfg;
      CalibrationState trial = state;
      for (int j = 0; j < n_planes; ++j) {
        trial.planes[j].point = update_plane_point(trial, samples[j], trial_cfg, j);
      }
      for (int j = 0; j < n_planes; ++j) {
        trial.planes[j].normal = update_plane_normal(trial, samples[j], trial_cfg, j);
      }
      ResidualSystem lin = sys;
      update_plane_rows(lin, trial.planes, groups, cfg.dial_mode);
      step = update_parameters(trial, lin, trial_cfg);
      next = build_residual_system(initial_model.applied(step.u), step.anchor, step.planes, groups, cfg.dial_mode,
                                   cfg.exec);
      const double limit = data_before * kGuardRatio + kGuardFloor * sys.length_rows;
      if (!cfg.safeguard || data_cost(next, cfg) <= limit || extra >= kMaxExtraLambda) break;
      extra = extra > 0.0 ? 10.0 * extra : kMinExtraLambda;
    }
    const bool damped = extra > 0.0;
    extra = extra > kMinExtraLambda ? extra / 10.0 : 0.0;

    state.u = step.u;
    state.anchor = step.anchor;
    state.planes = step.planes;
    sys = std::move(next);
    state.multipliers = update_multipliers(state, plane_samples(sys.positions, groups, cfg.dial_mode), cfg);
    state.iteration = t + 1;

    res.step_norms.push_back(step.step_norm);
    res.iterations_used = t + 1;
    if (!damped && step.step_norm <= cfg.convergence_tol) {
      res.converged = true;
      break;
    }
  }
  res.objective_trace.push_back(augmented_lagrangian(state, groups, initial_model, cfg));
  res.model = initial_model.applied(state.u);
  res.state = std::move(state);
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace mpcal
