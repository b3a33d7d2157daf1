#include "aptraj/belief_dynamics.hpp"

#include <stdexcept>

namespace aptraj {

VectorXd to_belief_vector(const Belief& b) {
  const Index n = b.dim();
  VectorXd v(belief_size(n));
  v << b.mu, vech(b.sigma);
  return v;
}

Belief from_belief_vector(const VectorXd& v, Index n) {
  if (v.size() != belief_size(n)) throw std::invalid_argument("from_belief_vector: size mismatch");
  return {v.head(n), unvech(v.tail(vech_size(n)), n)};
}

BeliefJacobians linearize_dynamics(const Predictor& pred, const Belief& belief, const VectorXd& u,
                                   InferenceMethod method) {
  const Index n = belief.dim();
  const Index m = u.size();
  const Index dim = n + m;
  if (pred.output_dim() != n || pred.input_dim != dim)
    throw std::invalid_argument("linearize_dynamics: belief/control dimensions do not match the model");
  const MomentDerivatives d = compute_derivatives(pred, make_joint(belief, u), method).derivatives;
  const Index nb = belief_size(n);

  BeliefJacobians jac;
  jac.Fv = MatrixXd::Zero(nb, nb);
  jac.Fu = MatrixXd::Zero(nb, m);

  // Column of the joint-covariance derivative for vech coordinate (a, b): the
  // symmetric pair moves together, so off-diagonal coordinates pick up a factor 2.
  auto sigma_col = [&](const MatrixXd& t, Index row, Index a, Index b) {
    const double f = a == b ? 1.0 : 2.0;
    return f * t(row, a + dim * b);
  };

  for (Index p = 0; p < n; ++p) {
    for (Index l = 0; l < n; ++l) jac.Fv(p, l) = (p == l ? 1.0 : 0.0) + d.dmu_dmu(p, l);
    for (Index j = 0; j < m; ++j) jac.Fu(p, j) = d.dmu_dmu(p, n + j);
    for (Index a = 0; a < n; ++a)
      for (Index b = a; b < n; ++b) jac.Fv(p, n + vech_index(n, a, b)) = sigma_col(d.dmu_dsigma, p, a, b);
  }

  for (Index p = 0; p < n; ++p) {
    for (Index q = p; q < n; ++q) {
      const Index row = n + vech_index(n, p, q);
      const Index rf = p + n * q;
      const Index rx1 = p + dim * q;  // Sigma_xf(p, q)
      const Index rx2 = q + dim * p;  // Sigma_xf(q, p)
      auto mu_deriv = [&](Index col) {
        return d.dsigma_f_dmu(rf, col) + d.dsigma_xf_dmu(rx1, col) + d.dsigma_xf_dmu(rx2, col);
      };
      for (Index l = 0; l < n; ++l) jac.Fv(row, l) = mu_deriv(l);
      for (Index j = 0; j < m; ++j) jac.Fu(row, j) = mu_deriv(n + j);
      for (Index a = 0; a < n; ++a)
        for (Index b = a; b < n; ++b) {
          const Index col = n + vech_index(n, a, b);
          jac.Fv(row, col) = (row == col ? 1.0 : 0.0) + sigma_col(d.dsigma_f_dsigma, rf, a, b) +
                             sigma_col(d.dsigma_xf_dsigma, rx1, a, b) +
                             sigma_col(d.dsigma_xf_dsigma, rx2, a, b);
        }
    }
  }
  return jac;
}

SSGPBeliefDynamics::SSGPBeliefDynamics(Predictor pred, InferenceMethod method, Index state_dim)
    : pred_(std::move(pred)), method_(method), n_(state_dim) {
  if (pred_.output_dim() != n_ || pred_.input_dim < n_)
    throw std::invalid_argument("SSGPBeliefDynamics: model outputs must equal the state dimension");
}

SSGPBeliefDynamics::SSGPBeliefDynamics(const SSGPModel& model, InferenceMethod method)
    : SSGPBeliefDynamics(make_predictor(model), method, model.output_dim()) {}

Belief SSGPBeliefDynamics::propagate(const Belief& b, const VectorXd& u) const {
  return propagate_belief(pred_, b, u, method_);
}

BeliefJacobians SSGPBeliefDynamics::linearize(const Belief& b, const VectorXd& u) const {
  return linearize_dynamics(pred_, b, u, method_);
}

AffineBeliefDynamics::AffineBeliefDynamics(MatrixXd a, MatrixXd b, VectorXd c, MatrixXd w)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), w_(std::move(w)) {
  const Index n = a_.rows();
  if (a_.cols() != n || b_.rows() != n || c_.size() != n || w_.rows() != n || w_.cols() != n)
    throw std::invalid_argument("AffineBeliefDynamics: inconsistent shapes");
}

Belief AffineBeliefDynamics::propagate(const Belief& b, const VectorXd& u) const {
  return {a_ * b.mu + b_ * u + c_, symmetrize(a_ * b.sigma * a_.transpose() + w_)};
}

BeliefJacobians AffineBeliefDynamics::linearize(const Belief&, const VectorXd&) const {
  const Index n = state_dim();
  const Index nb = belief_size(n);
  BeliefJacobians jac;
  jac.Fv = MatrixXd::Zero(nb, nb);
  jac.Fu = MatrixXd::Zero(nb, control_dim());
  jac.Fv.topLeftCorner(n, n) = a_;
  jac.Fu.topRows(n) = b_;
  for (Index p = 0; p < n; ++p)
    for (Index q = p; q < n; ++q)
      for (Index a = 0; a < n; ++a)
        for (Index b = a; b < n; ++b) {
          double v = a_(p, a) * a_(q, b);
          if (a != b) v += a_(p, b) * a_(q, a);
          jac.Fv(n + vech_index(n, p, q), n + vech_index(n, a, b)) = v;
        }
  return jac;
}

}  // namespace aptraj
