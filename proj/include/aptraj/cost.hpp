#pragma once

#include <functional>
#include <optional>

#include "aptraj/belief_dynamics.hpp"

namespace aptraj {

using GoalFn = std::function<VectorXd(Index)>;

struct CostSpec {
  MatrixXd Q;   // running state weight
  MatrixXd R;   // control weight
  MatrixXd Qf;  // terminal state weight
  GoalFn goal;

  /// Constant goal; Qf defaults to 10 Q when not given.
  static CostSpec make(MatrixXd q, MatrixXd r, VectorXd goal, std::optional<MatrixXd> qf = std::nullopt);

  Index state_dim() const { return Q.rows(); }
  Index control_dim() const { return R.rows(); }
  /// Throws std::invalid_argument unless Q, Qf are symmetric PSD and R is symmetric PD.
  void validate() const;
};

/// Value, gradient and Hessian of the expected quadratic cost in (v, u),
/// v = [mu; vech(Sigma)].
struct CostExpansion {
  double value = 0.0;
  VectorXd lv;
  VectorXd lu;
  MatrixXd lvv;
  MatrixXd luu;
  MatrixXd luv;
};

/// tr(Sigma Q) + (mu - goal_k)^T Q (mu - goal_k) + u^T R u, or with Qf and no
/// control term when `u` is absent.
CostExpansion expected_cost(const Belief& belief, const std::optional<VectorXd>& u,
                            const CostSpec& spec, Index k);

double stage_cost_value(const Belief& belief, const VectorXd& u, const CostSpec& spec, Index k);
double terminal_cost_value(const Belief& belief, const CostSpec& spec, Index k);

}  // namespace aptraj
