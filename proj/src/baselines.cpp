#include "mpcal/baselines.hpp"

#include "mpcal/errors.hpp"
#include "mpcal/plane_fit.hpp"

#include <chrono>
#include <cmath>

namespace mpcal {

namespace {

// Mean squared residual below which a data set counts as already fitted.
constexpr double kNegligibleMeanCost = 1e-18;

struct Trial {
  ParameterVector u;
  Vector3 anchor;
  double step_norm;
};

Trial apply_step(const CalibrationState& s, const Eigen::VectorXd& dx, const ParameterMask& mask) {
  ParameterVector du;
  Vector3 da;
  scatter_step(dx, mask, du, da);
  return {s.u + du, s.anchor + da, dx.norm()};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double weighted_cost(const ResidualSystem& sys, double plane_weight) {
  const auto n = sys.length_rows;
  return sys.residual.head(n).squaredNorm() + plane_weight * sys.residual.tail(sys.rows() - n).squaredNorm();
}

Eigen::VectorXd gauss_newton_step(const ResidualSystem& sys, std::span<const PlaneEstimate> planes,
                                  const ParameterMask& mask, const StepOptions& opts) {
  const auto cols = unknown_columns(mask);
  const int k = static_cast<int>(cols.size());
  Eigen::MatrixXd a(sys.rows(), k);
  for (int c = 0; c < k; ++c) a.col(c) = sys.jacobian.col(cols[static_cast<std::size_t>(c)]);
  if (opts.project_planes) {
    int r = sys.length_rows;
    for (std::size_t j = 0; j < sys.positions.size(); ++j) {
      const auto& pos = sys.positions[j];
      const int nj = static_cast<int>(pos.size());
      const auto [tu, tv] = plane_basis(planes[j].normal);
      Eigen::MatrixXd b(nj, 3);
      for (int i = 0; i < nj; ++i) {
        const Vector3 g = pos[static_cast<std::size_t>(i)] - planes[j].point;
        b.row(i) << 1.0, tu.dot(g), tv.dot(g);
      }
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(b);
      const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(nj, 3);
      auto block = a.middleRows(r, nj);
      block -= q * (q.transpose() * block);
      r += nj;
    }
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(sys.rows());
  w.tail(sys.rows() - sys.length_rows).setConstant(opts.plane_weight);
  NormalEquations ne = accumulate_normal_equations(a, -sys.residual, w, opts.exec);
  if (opts.marquardt) {
    ne.lhs.diagonal() += opts.damping * ne.lhs.diagonal();
  } else {
    ne.lhs.diagonal().array() += opts.damping;
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(ne.lhs);
  if (ldlt.info() != Eigen::Success) throw NumericalFailure("Gauss-Newton normal matrix factorization failed");
  Eigen::VectorXd dx = ldlt.solve(ne.rhs);
  if (!dx.allFinite()) throw NumericalFailure("Gauss-Newton step is not finite");
  return dx;
}

std::vector<PlaneEstimate> refit_planes(const std::vector<std::vector<Vector3>>& positions,
                                        const SampleGroups& groups, std::span<const PlaneEstimate> previous,
                                        DialMode mode) {
  std::vector<PlaneEstimate> out;
  out.reserve(groups.size());
  for (std::size_t j = 0; j < groups.size(); ++j) {
    const Vector3 prev_n = previous[j].normal;
    std::vector<Vector3> contact(positions[j].size());
    for (std::size_t i = 0; i < contact.size(); ++i) {
      const double dial = mode == DialMode::Correction ? groups[j].samples[i].dial_reading : 0.0;
      contact[i] = positions[j][i] - dial * prev_n;
    }
    PlaneEstimate pl = fit_plane(contact);
    if (pl.normal.dot(prev_n) < 0.0) pl.normal = -pl.normal;
    out.push_back(pl);
  }
  return out;
}

namespace {

struct Evaluation {
  std::vector<PlaneEstimate> planes;
  ResidualSystem sys;
  double cost = 0.0;
};

template <class Config>
Evaluation evaluate_at(const RobotModel& initial_model, const ParameterVector& u, const Vector3& anchor,
                       std::span<const PlaneEstimate> previous, const SampleGroups& groups, const Config& cfg) {
  const RobotModel model = initial_model.applied(u);
  Evaluation e;
  e.planes = refit_planes(group_positions(model, groups, cfg.exec), groups, previous, cfg.dial_mode);
  e.sys = build_residual_system(model, anchor, e.planes, groups, cfg.dial_mode, cfg.exec);
  e.cost = weighted_cost(e.sys, cfg.plane_weight);
  return e;
}

CalibrationResult finish(CalibrationResult res, CalibrationState state, const Evaluation& last,
                         const RobotModel& initial_model, std::size_t n_groups,
                         std::chrono::steady_clock::time_point t0) {
  state.planes = last.planes;
  state.iteration = res.iterations_used;
  state.multipliers.assign(n_groups, 0.0);
  res.objective_trace.push_back(last.cost);
  res.model = initial_model.applied(state.u);
  res.state = std::move(state);
  res.wall_time_s = seconds_since(t0);
  return res;
}

}  // namespace

CalibrationResult calibrate_lm(const SampleGroups& groups, const RobotModel& initial_model, const LmConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  require_groups(groups);
  CalibrationState state = initial_state(groups, initial_model, cfg.anchor_hint);
  const double m = static_cast<double>(total_samples(groups));

  CalibrationResult res;
  res.method = "lm";
  double mu = cfg.initial_damping;
  Evaluation cur = evaluate_at(initial_model, state.u, state.anchor, state.planes, groups, cfg);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    state.iteration = it;
    res.objective_trace.push_back(cur.cost);
    res.iterations_used = it + 1;
    if (cur.cost / m < kNegligibleMeanCost) {
      res.step_norms.push_back(0.0);
      res.converged = true;
      break;
    }

    bool accepted = false;
    const double cost = cur.cost;
    while (!accepted && mu <= cfg.max_damping) {
      const Eigen::VectorXd dx = gauss_newton_step(cur.sys, cur.planes, cfg.mask,
                                                   {cfg.plane_weight, mu, true, cfg.project_planes, cfg.exec});
      const Trial trial = apply_step(state, dx, cfg.mask);
      Evaluation next = evaluate_at(initial_model, trial.u, trial.anchor, cur.planes, groups, cfg);
      if (next.cost < cost) {
        accepted = true;
        state.u = trial.u;
        state.anchor = trial.anchor;
        res.step_norms.push_back(trial.step_norm);
        cur = std::move(next);
        mu /= cfg.damping_down;
      } else {
        mu *= cfg.damping_up;
      }
    }
    if (!accepted) {
      // No damping level yields descent: stationary to working precision.
      res.step_norms.push_back(0.0);
      res.converged = true;
      break;
    }
    if ((cost - cur.cost) / cost < cfg.relative_tol) {
      res.converged = true;
      break;
    }
  }
  return finish(std::move(res), std::move(state), cur, initial_model, groups.size(), t0);
}

CalibrationResult calibrate_ls(const SampleGroups& groups, const RobotModel& initial_model, const LsConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  require_groups(groups);
  CalibrationState state = initial_state(groups, initial_model, cfg.anchor_hint);
  const double m = static_cast<double>(total_samples(groups));

  CalibrationResult res;
  res.method = "ls";
  int increases = 0;
  Evaluation cur = evaluate_at(initial_model, state.u, state.anchor, state.planes, groups, cfg);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    state.iteration = it;
    res.objective_trace.push_back(cur.cost);
    res.iterations_used = it + 1;
    if (cur.cost / m < kNegligibleMeanCost) {
      res.step_norms.push_back(0.0);
      res.converged = true;
      break;
    }

    const Eigen::VectorXd dx = gauss_newton_step(cur.sys, cur.planes, cfg.mask,
                                                 {cfg.plane_weight, cfg.ridge, false, cfg.project_planes, cfg.exec});
    const Trial trial = apply_step(state, dx, cfg.mask);
    state.u = trial.u;
    state.anchor = trial.anchor;
    res.step_norms.push_back(trial.step_norm);
    const double cost = cur.cost;
    cur = evaluate_at(initial_model, state.u, state.anchor, cur.planes, groups, cfg);
    const double rel = (cost - cur.cost) / cost;
    if (rel < 0.0) {
      if (++increases >= cfg.divergence_limit) break;
      continue;
    }
    increases = 0;
    if (rel < cfg.relative_tol) {
      res.converged = true;
      break;
    }
  }
  return finish(std::move(res), std::move(state), cur, initial_model, groups.size(), t0);
}

}  // namespace mpcal
