#pragma once

// Belief-space transition models and their analytic Jacobians over the
// belief vector v = [mu; vech(Sigma)].

#include <memory>

#include "aptraj/inference.hpp"

namespace aptraj {

inline Index belief_size(Index n) { return n + vech_size(n); }

VectorXd to_belief_vector(const Belief& b);
Belief from_belief_vector(const VectorXd& v, Index n);

struct BeliefJacobians {
  MatrixXd Fv;  // belief_size x belief_size
  MatrixXd Fu;  // belief_size x m
};

class BeliefDynamics {
 public:
  virtual ~BeliefDynamics() = default;
  virtual Index state_dim() const = 0;
  virtual Index control_dim() const = 0;
  virtual Belief propagate(const Belief& b, const VectorXd& u) const = 0;
  virtual BeliefJacobians linearize(const Belief& b, const VectorXd& u) const = 0;
};

/// Belief dynamics of a learned SSGP model under EMM or LIN propagation.
class SSGPBeliefDynamics final : public BeliefDynamics {
 public:
  SSGPBeliefDynamics(Predictor pred, InferenceMethod method, Index state_dim);
  SSGPBeliefDynamics(const SSGPModel& model, InferenceMethod method);

  Index state_dim() const override { return n_; }
  Index control_dim() const override { return pred_.input_dim - n_; }
  Belief propagate(const Belief& b, const VectorXd& u) const override;
  BeliefJacobians linearize(const Belief& b, const VectorXd& u) const override;

  const Predictor& predictor() const { return pred_; }
  InferenceMethod method() const { return method_; }

 private:
  Predictor pred_;
  InferenceMethod method_;
  Index n_;
};

/// mu' = A mu + B u + c,  Sigma' = A Sigma A^T + W.
class AffineBeliefDynamics final : public BeliefDynamics {
 public:
  AffineBeliefDynamics(MatrixXd a, MatrixXd b, VectorXd c, MatrixXd w);

  Index state_dim() const override { return a_.rows(); }
  Index control_dim() const override { return b_.cols(); }
  Belief propagate(const Belief& b, const VectorXd& u) const override;
  BeliefJacobians linearize(const Belief& b, const VectorXd& u) const override;

  const MatrixXd& A() const { return a_; }
  const MatrixXd& B() const { return b_; }
  const VectorXd& c() const { return c_; }
  const MatrixXd& W() const { return w_; }

 private:
  MatrixXd a_, b_;
  VectorXd c_;
  MatrixXd w_;
};

/// Chains moment derivatives through mu' = mu + mu_f and
/// Sigma' = Sigma + Sigma_f + Sigma_xf + Sigma_fx.
BeliefJacobians linearize_dynamics(const Predictor& pred, const Belief& belief, const VectorXd& u,
                                   InferenceMethod method);

inline BeliefJacobians linearize_dynamics(const SSGPModel& model, const Belief& belief,
                                          const VectorXd& u, InferenceMethod method) {
  return linearize_dynamics(make_predictor(model), belief, u, method);
}

}  // namespace aptraj
