#include "aptraj/ddp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "aptraj/box_qp.hpp"

namespace aptraj {

std::vector<VectorXd> zero_controls(Index horizon, Index m) {
  if (horizon < 2) throw std::invalid_argument("zero_controls: horizon must be >= 2");
  return std::vector<VectorXd>(static_cast<std::size_t>(horizon - 1), VectorXd::Zero(m));
}

Trajectory rollout(const BeliefDynamics& dyn, const Belief& x0, const std::vector<VectorXd>& controls) {
  Trajectory t;
  t.controls = controls;
  t.beliefs.reserve(controls.size() + 1);
  t.beliefs.push_back(x0);
  for (const VectorXd& u : controls) t.beliefs.push_back(dyn.propagate(t.beliefs.back(), u));
  return t;
}

double trajectory_cost(const Trajectory& traj, const CostSpec& spec) {
  const Index h = traj.horizon();
  if (h < 1 || static_cast<Index>(traj.controls.size()) != h - 1)
    throw std::invalid_argument("trajectory_cost: need H beliefs and H - 1 controls");
  double c = 0.0;
  for (Index k = 0; k + 1 < h; ++k) c += stage_cost_value(traj.beliefs[k], traj.controls[k], spec, k);
  return c + terminal_cost_value(traj.beliefs[h - 1], spec, h - 1);
}

BackwardResult backward_pass(const Trajectory& traj, const std::vector<BeliefJacobians>& jacs,
                             const CostSpec& spec, double reg, const std::optional<ControlBounds>& bounds) {
  const Index h = traj.horizon();
  if (h < 2 || static_cast<Index>(traj.controls.size()) != h - 1 ||
      static_cast<Index>(jacs.size()) != h - 1)
    throw std::invalid_argument("backward_pass: trajectory and jacobians are not aligned");
  if (!(reg >= 0.0)) throw std::invalid_argument("backward_pass: reg must be >= 0");
  const Index m = spec.control_dim();

  BackwardResult out;
  out.policies.resize(h - 1);
  out.values.resize(h);
  out.q.resize(h - 1);

  const CostExpansion term = expected_cost(traj.beliefs[h - 1], std::nullopt, spec, h - 1);
  out.values[h - 1] = {term.value, term.lv, term.lvv};

  for (Index k = h - 2; k >= 0; --k) {
    const CostExpansion c = expected_cost(traj.beliefs[k], traj.controls[k], spec, k);
    const BeliefJacobians& f = jacs[k];
    const ValueExpansion& next = out.values[k + 1];

    QBlocks& q = out.q[k];
    q.Qv = c.lv + f.Fv.transpose() * next.Vv;
    q.Qu = c.lu + f.Fu.transpose() * next.Vv;
    const MatrixXd vf = next.Vvv * f.Fv;
    q.Qvv = symmetrize(c.lvv + f.Fv.transpose() * vf);
    q.Quv = c.luv + f.Fu.transpose() * vf;
    q.Quu = symmetrize(c.luu + f.Fu.transpose() * next.Vvv * f.Fu);
    MatrixXd quu_reg = q.Quu;
    quu_reg.diagonal().array() += reg;

    LocalPolicy& pol = out.policies[k];
    pol.L = MatrixXd::Zero(m, q.Qvv.rows());
    pol.clamped.assign(static_cast<std::size_t>(m), false);
    if (bounds) {
      BoxQpResult qp;
      try {
        qp = box_qp(quu_reg, q.Qu, bounds->lo - traj.controls[k], bounds->hi - traj.controls[k],
                    VectorXd::Zero(m));
      } catch (const std::invalid_argument&) {
        return out;
      }
      pol.I = qp.x;
      std::vector<Index> free_idx;
      for (Index i = 0; i < m; ++i) {
        pol.clamped[i] = !qp.free[i];
        if (qp.free[i]) free_idx.push_back(i);
      }
      if (!free_idx.empty()) {
        MatrixXd quv_f(static_cast<Index>(free_idx.size()), q.Quv.cols());
        for (std::size_t a = 0; a < free_idx.size(); ++a) quv_f.row(a) = q.Quv.row(free_idx[a]);
        const MatrixXd l_f = -qp.free_factor.solve(quv_f);
        for (std::size_t a = 0; a < free_idx.size(); ++a) pol.L.row(free_idx[a]) = l_f.row(a);
      }
    } else {
      Eigen::LLT<MatrixXd> llt(quu_reg);
      if (llt.info() != Eigen::Success) return out;
      pol.I = -llt.solve(q.Qu);
      pol.L = -llt.solve(q.Quv);
    }

    const VectorXd quu_i = q.Quu * pol.I;
    out.dv_linear += pol.I.dot(q.Qu);
    out.dv_quadratic += 0.5 * pol.I.dot(quu_i);

    ValueExpansion& v = out.values[k];
    v.V = c.value + next.V + pol.I.dot(q.Qu) + 0.5 * pol.I.dot(quu_i);
    v.Vv = q.Qv + pol.L.transpose() * quu_i + pol.L.transpose() * q.Qu + q.Quv.transpose() * pol.I;
    const MatrixXd lq = pol.L.transpose() * q.Quv;
    v.Vvv = symmetrize(q.Qvv + pol.L.transpose() * q.Quu * pol.L + lq + lq.transpose());
  }
  out.ok = true;
  return out;
}

ForwardResult forward_pass(const BeliefDynamics& dyn, const Trajectory& nominal,
                           const std::vector<LocalPolicy>& policies, double alpha, const CostSpec& spec,
                           const std::optional<ControlBounds>& bounds) {
  const Index h = nominal.horizon();
  if (static_cast<Index>(policies.size()) != h - 1)
    throw std::invalid_argument("forward_pass: one policy per control is required");
  ForwardResult res;
  res.traj.beliefs.reserve(h);
  res.traj.controls.reserve(h - 1);
  res.traj.beliefs.push_back(nominal.beliefs[0]);
  try {
    for (Index k = 0; k + 1 < h; ++k) {
      const Belief& b = res.traj.beliefs.back();
      const VectorXd dv = to_belief_vector(b) - to_belief_vector(nominal.beliefs[k]);
      VectorXd u = nominal.controls[k] + alpha * policies[k].I + policies[k].L * dv;
      if (bounds) u = bounds->clamp(u);
      if (!u.allFinite()) throw std::runtime_error("non-finite control");
      res.traj.controls.push_back(u);
      res.traj.beliefs.push_back(dyn.propagate(b, u));
    }
    res.cost = trajectory_cost(res.traj, spec);
  } catch (const std::exception&) {
    res.cost = std::numeric_limits<double>::infinity();
    return res;
  }
  if (!std::isfinite(res.cost)) res.cost = std::numeric_limits<double>::infinity();
  return res;
}

TrajOptResult optimize(const BeliefDynamics& dyn, const Belief& x0, const std::vector<VectorXd>& init_controls,
                       const CostSpec& spec, const SolverOptions& opts) {
  spec.validate();
  const Index m = dyn.control_dim();
  if (init_controls.empty()) throw std::invalid_argument("optimize: horizon must be >= 2");
  for (const VectorXd& u : init_controls)
    if (u.size() != m) throw std::invalid_argument("optimize: control dimension mismatch");
  if (x0.dim() != dyn.state_dim()) throw std::invalid_argument("optimize: belief dimension mismatch");
  if (opts.bounds && (opts.bounds->lo.size() != m || opts.bounds->hi.size() != m))
    throw std::invalid_argument("optimize: bound dimension mismatch");

  std::vector<VectorXd> controls = init_controls;
  if (opts.bounds)
    for (VectorXd& u : controls) u = opts.bounds->clamp(u);
  Trajectory traj = rollout(dyn, x0, controls);
  double cost = trajectory_cost(traj, spec);
  if (!std::isfinite(cost)) throw std::runtime_error("optimize: initial rollout diverged");

  TrajOptResult res;
  res.cost_history.push_back(cost);
  double reg = opts.reg_init;
  std::vector<LocalPolicy> policies;

  for (int it = 0; it < opts.max_iters; ++it) {
    res.iterations = it + 1;
    std::vector<BeliefJacobians> jacs;
    jacs.reserve(traj.controls.size());
    for (std::size_t k = 0; k < traj.controls.size(); ++k)
      jacs.push_back(dyn.linearize(traj.beliefs[k], traj.controls[k]));

    BackwardResult bw = backward_pass(traj, jacs, spec, reg, opts.bounds);
    while (!bw.ok && reg <= opts.reg_max) {
      reg = std::max(reg * opts.reg_increase, 1e-12);
      bw = backward_pass(traj, jacs, spec, reg, opts.bounds);
    }
    if (!bw.ok) break;
    policies = bw.policies;

    const double expected = -bw.expected_improvement(1.0);
    if (expected <= opts.tol * std::abs(cost)) {
      res.converged = true;
      break;
    }

    bool accepted = false;
    double alpha = 1.0;
    for (int ls = 0; ls < opts.line_search_steps; ++ls, alpha *= 0.5) {
      ForwardResult fw = forward_pass(dyn, traj, bw.policies, alpha, spec, opts.bounds);
      if (fw.cost < cost) {
        const double rel = (cost - fw.cost) / std::max(std::abs(cost), std::numeric_limits<double>::min());
        traj = std::move(fw.traj);
        cost = fw.cost;
        res.cost_history.push_back(cost);
        accepted = true;
        reg /= opts.reg_decrease;
        if (rel < opts.tol) res.converged = true;
        break;
      }
    }
    if (res.converged) break;
    if (!accepted) {
      reg = std::max(reg * opts.reg_increase, 1e-12);
      if (reg > opts.reg_max) break;
    }
  }

  res.beliefs = std::move(traj.beliefs);
  res.controls = std::move(traj.controls);
  res.policies = std::move(policies);
  res.cost = cost;
  return res;
}

}  // namespace aptraj
