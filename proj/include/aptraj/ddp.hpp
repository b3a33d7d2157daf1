#pragma once

// Belief-space differential dynamic programming with box control bounds.

#include <optional>
#include <vector>

#include "aptraj/belief_dynamics.hpp"
#include "aptraj/cost.hpp"

namespace aptraj {

struct ControlBounds {
  VectorXd lo;
  VectorXd hi;

  VectorXd clamp(const VectorXd& u) const { return u.cwiseMax(lo).cwiseMin(hi); }
};

struct Trajectory {
  std::vector<Belief> beliefs;    // H entries
  std::vector<VectorXd> controls; // H - 1 entries

  Index horizon() const { return static_cast<Index>(beliefs.size()); }
};

struct LocalPolicy {
  VectorXd I;                 // feedforward
  MatrixXd L;                 // m x belief_size feedback gain
  std::vector<bool> clamped;  // bound-active controls; their rows of L are zero
};

struct ValueExpansion {
  double V = 0.0;
  VectorXd Vv;
  MatrixXd Vvv;
};

struct QBlocks {
  VectorXd Qv, Qu;
  MatrixXd Qvv, Quv, Quu;  // Quu without regularization
};

struct BackwardResult {
  bool ok = false;
  std::vector<LocalPolicy> policies;  // H - 1
  std::vector<ValueExpansion> values; // H, values[k] expands the cost-to-go at belief k
  std::vector<QBlocks> q;             // H - 1
  double dv_linear = 0.0;             // sum I^T Qu
  double dv_quadratic = 0.0;          // sum 1/2 I^T Quu I

  /// Predicted cost change of a forward pass with step alpha.
  double expected_improvement(double alpha) const {
    return alpha * dv_linear + alpha * alpha * dv_quadratic;
  }
};

/// Rolls the belief forward under the given controls.
Trajectory rollout(const BeliefDynamics& dyn, const Belief& x0, const std::vector<VectorXd>& controls);

/// Sum of stage costs plus the terminal cost at the last belief.
double trajectory_cost(const Trajectory& traj, const CostSpec& spec);

/// Returns ok = false when the regularized Quu is not positive definite at some step.
BackwardResult backward_pass(const Trajectory& traj, const std::vector<BeliefJacobians>& jacs,
                             const CostSpec& spec, double reg,
                             const std::optional<ControlBounds>& bounds);

struct ForwardResult {
  Trajectory traj;
  double cost = 0.0;  // +infinity on divergence
};

/// u_k = clamp(u_bar_k + alpha I_k + L_k (v_k - v_bar_k)).
ForwardResult forward_pass(const BeliefDynamics& dyn, const Trajectory& nominal,
                           const std::vector<LocalPolicy>& policies, double alpha, const CostSpec& spec,
                           const std::optional<ControlBounds>& bounds);

struct SolverOptions {
  int max_iters = 100;
  double tol = 1e-6;
  double reg_init = 1e-6;
  double reg_max = 1e10;
  double reg_increase = 10.0;
  double reg_decrease = 2.0;
  int line_search_steps = 11;  // alpha = 1, 1/2, ..., 2^-(steps-1)
  std::optional<ControlBounds> bounds;
};

struct TrajOptResult {
  std::vector<Belief> beliefs;
  std::vector<VectorXd> controls;
  std::vector<LocalPolicy> policies;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;  // initial cost, then one entry per accepted iteration

  Trajectory trajectory() const { return {beliefs, controls}; }
};

/// `init_controls` has H - 1 entries; empty means zeros of length H - 1 = horizon - 1.
TrajOptResult optimize(const BeliefDynamics& dyn, const Belief& x0, const std::vector<VectorXd>& init_controls,
                       const CostSpec& spec, const SolverOptions& opts);

/// Zero controls for a horizon of H beliefs.
std::vector<VectorXd> zero_controls(Index horizon, Index m);

}  // namespace aptraj
