#include "aptraj/cost.hpp"

#include <stdexcept>

namespace aptraj {

CostSpec CostSpec::make(MatrixXd q, MatrixXd r, VectorXd goal, std::optional<MatrixXd> qf) {
  CostSpec spec;
  spec.Qf = qf ? *qf : MatrixXd(10.0 * q);
  spec.Q = std::move(q);
  spec.R = std::move(r);
  spec.goal = [g = std::move(goal)](Index) { return g; };
  return spec;
}

void CostSpec::validate() const {
  const Index n = Q.rows();
  if (Q.cols() != n || Qf.rows() != n || Qf.cols() != n || R.rows() != R.cols())
    throw std::invalid_argument("CostSpec: weight matrices must be square and consistent");
  if (!is_symmetric_psd(Q, 1e-12, 1e-12)) throw std::invalid_argument("CostSpec: Q must be symmetric PSD");
  if (!is_symmetric_psd(Qf, 1e-12, 1e-12)) throw std::invalid_argument("CostSpec: Qf must be symmetric PSD");
  if (R.rows() > 0) {
    if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("CostSpec: R must be symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(R, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues()(0) > 0.0)) throw std::invalid_argument("CostSpec: R must be positive definite");
  }
  if (!goal) throw std::invalid_argument("CostSpec: goal function is empty");
}

CostExpansion expected_cost(const Belief& belief, const std::optional<VectorXd>& u,
                            const CostSpec& spec, Index k) {
  const Index n = belief.dim();
  const Index m = spec.control_dim();
  if (spec.state_dim() != n) throw std::invalid_argument("expected_cost: state dimension mismatch");
  if (u && u->size() != m) throw std::invalid_argument("expected_cost: control dimension mismatch");
  const MatrixXd& q = u ? spec.Q : spec.Qf;
  const VectorXd goal = spec.goal(k);
  if (goal.size() != n) throw std::invalid_argument("expected_cost: goal dimension mismatch");
  const VectorXd e = belief.mu - goal;
  const Index nb = belief_size(n);

  CostExpansion c;
  c.value = (belief.sigma.cwiseProduct(q.transpose())).sum() + e.dot(q * e);
  c.lv = VectorXd::Zero(nb);
  c.lv.head(n) = (q + q.transpose()) * e;
  for (Index a = 0; a < n; ++a)
    for (Index b = a; b < n; ++b) c.lv(n + vech_index(n, a, b)) = a == b ? q(a, a) : q(a, b) + q(b, a);
  c.lvv = MatrixXd::Zero(nb, nb);
  c.lvv.topLeftCorner(n, n) = q + q.transpose();
  c.luv = MatrixXd::Zero(m, nb);
  if (u) {
    c.value += u->dot(spec.R * *u);
    c.lu = (spec.R + spec.R.transpose()) * *u;
    c.luu = spec.R + spec.R.transpose();
  } else {
    c.lu = VectorXd::Zero(m);
    c.luu = MatrixXd::Zero(m, m);
  }
  return c;
}

double stage_cost_value(const Belief& belief, const VectorXd& u, const CostSpec& spec, Index k) {
  const VectorXd e = belief.mu - spec.goal(k);
  return (belief.sigma.cwiseProduct(spec.Q.transpose())).sum() + e.dot(spec.Q * e) + u.dot(spec.R * u);
}

double terminal_cost_value(const Belief& belief, const CostSpec& spec, Index k) {
  const VectorXd e = belief.mu - spec.goal(k);
  return (belief.sigma.cwiseProduct(spec.Qf.transpose())).sum() + e.dot(spec.Qf * e);
}

}  // namespace aptraj
