#pragma once

// Propagation of Gaussian input uncertainty through a trained SSGP model.
//
// Two schemes are provided: exact moment matching (EMM), which evaluates the
// Gaussian trigonometric integrals in closed form, and linearization (LIN),
// which expands the posterior mean to first order about the input mean.

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "aptraj/linalg.hpp"
#include "aptraj/ssgp.hpp"

namespace aptraj {

enum class InferenceMethod { kExactMoments, kLinearized };

const char* to_string(InferenceMethod m);
InferenceMethod inference_method_from_string(const std::string& s);

struct Belief {
  VectorXd mu;
  MatrixXd sigma;

  Index dim() const { return mu.size(); }
  static Belief point(const VectorXd& x) { return {x, MatrixXd::Zero(x.size(), x.size())}; }
};

struct JointInput {
  VectorXd mu;     // (n + m)
  MatrixXd sigma;  // (n + m) x (n + m)
};

/// Joint input with the state block taken from the belief and a deterministic control.
JointInput make_joint(const Belief& belief, const VectorXd& u);

struct OutputMoments {
  VectorXd mu_f;     // n
  MatrixXd sigma_f;  // n x n
  MatrixXd sigma_xf; // (n + m) x n
};

/// Immutable, inference-ready view of an SSGPModel. Holds the frequency
/// matrices and the scaled posterior weight covariance so that every moment
/// evaluation costs O(r^2) per output pair.
struct OutputPredictor {
  MatrixXd omega;       // r x D
  VectorXd w;           // 2r
  double amp = 1.0;     // sigma_f / sqrt(r)
  double noise_var = 0; // sigma_n^2
  MatrixXd noise_quad;  // A^{-1} / M; point variance is noise_var * (1 + phi^T noise_quad phi)
  double offset = 0.0;

  Index r() const { return omega.rows(); }
};

struct Predictor {
  std::vector<OutputPredictor> outputs;
  Index input_dim = 0;

  Index output_dim() const { return static_cast<Index>(outputs.size()); }
};

Predictor make_predictor(const SSGPModel& model);

PointPrediction predict_point(const Predictor& pred, const VectorXd& x);

OutputMoments emm_moments(const Predictor& pred, const JointInput& joint);
OutputMoments lin_moments(const Predictor& pred, const JointInput& joint);
OutputMoments compute_moments(const Predictor& pred, const JointInput& joint, InferenceMethod method);

inline OutputMoments emm_moments(const SSGPModel& model, const JointInput& joint) {
  return emm_moments(make_predictor(model), joint);
}
inline OutputMoments lin_moments(const SSGPModel& model, const JointInput& joint) {
  return lin_moments(make_predictor(model), joint);
}

/// Derivatives of OutputMoments with respect to the joint input mean and covariance.
/// Flattening is column-major: Sigma_f(p, q) -> p + n q, Sigma_xf(k, d) -> k + D d,
/// joint covariance entry (a, b) -> a + D b. Covariance derivatives come from the
/// full-matrix gradient symmetrized over (a, b), so a symmetric perturbation
/// h (E_ab + E_ba) changes an output by 2 h times the (a, b) entry (h times for a == b).
struct MomentDerivatives {
  MatrixXd dmu_dmu;           // n x D
  MatrixXd dmu_dsigma;        // n x D^2
  MatrixXd dsigma_f_dmu;      // n^2 x D
  MatrixXd dsigma_f_dsigma;   // n^2 x D^2
  MatrixXd dsigma_xf_dmu;     // D n x D
  MatrixXd dsigma_xf_dsigma;  // D n x D^2
};

struct MomentsWithDerivatives {
  OutputMoments moments;
  MomentDerivatives derivatives;
};

MomentsWithDerivatives emm_derivatives(const Predictor& pred, const JointInput& joint);
MomentsWithDerivatives lin_derivatives(const Predictor& pred, const JointInput& joint);
MomentsWithDerivatives compute_derivatives(const Predictor& pred, const JointInput& joint,
                                           InferenceMethod method);

struct MonteCarloMoments {
  OutputMoments moments;
  OutputMoments standard_errors;
  Index samples = 0;
};

/// Sampling oracle: draws x ~ N(mu, Sigma), evaluates the point posterior at
/// each draw and aggregates with the law of total variance.
MonteCarloMoments mc_moments(const Predictor& pred, const JointInput& joint, Index n_samples,
                             std::uint64_t seed);

/// One step of the belief dynamics: mu' = mu + mu_f,
/// Sigma' = Sigma + Sigma_f + Sigma_xf + Sigma_fx (state rows), repaired to PSD.
Belief propagate_belief(const Predictor& pred, const Belief& belief, const VectorXd& u,
                        InferenceMethod method);

inline Belief propagate_belief(const SSGPModel& model, const Belief& belief, const VectorXd& u,
                               InferenceMethod method) {
  return propagate_belief(make_predictor(model), belief, u, method);
}

/// Transient quantities of both schemes for one output, for debugging.
struct InferenceWorkspace {
  Index output = 0;
  VectorXd q;        // 2r, E[phi(x)]
  MatrixXd S;        // 2r x 2r, sigma_n^2 A^{-1} + w w^T
  MatrixXd T;        // 2r x 2r, E[phi phi^T]
  std::vector<MatrixXd> t_cross;  // T^{ij} against every output j (entry j == output equals T)
  MatrixXd P;        // D x 2r, column i = E[phi_i(x) x]
  MatrixXd theta1;   // r^2 x D, row i r + j = omega_i + omega_j
  MatrixXd theta2;   // r^2 x D, row i r + j = omega_i - omega_j
  VectorXd es;       // r
  VectorXd ec;       // r
  VectorXd a;        // D, linearization slope
  double b = 0.0;    // linearization intercept
  MatrixXd D;        // D x 2r, feature Jacobian at the mean
};

InferenceWorkspace inference_workspace(const Predictor& pred, const JointInput& joint, Index output);
nlohmann::json workspace_to_json(const InferenceWorkspace& ws);

}  // namespace aptraj
