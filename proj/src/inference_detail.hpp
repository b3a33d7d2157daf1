#pragma once

#include "aptraj/inference.hpp"

namespace aptraj::detail {

// Per-output projections of the joint input onto the frequency rows.
struct OutputGeometry {
  VectorXd a;        // omega mu
  VectorXd v;        // diag(omega Sigma omega^T)
  VectorXd ec;       // exp(-v/2) cos(a)
  VectorXd es;       // exp(-v/2) sin(a)
  MatrixXd omega_sigma;  // omega Sigma, r x D
};

OutputGeometry output_geometry(const OutputPredictor& out, const JointInput& joint);

double damped(double variance_term);

// Damped trig values for every frequency pair (s of output i, t of output j).
struct PairTrig {
  Eigen::ArrayXXd c1, s1, c2, s2;  // sums: theta1 = omega_s + omega_t, differences: theta2 = omega_s - omega_t
  double k = 0.0;                  // amp_i amp_j / 2
};

PairTrig pair_trig(const OutputPredictor& pi, const OutputGeometry& gi, const OutputPredictor& pj,
                   const OutputGeometry& gj);

// w_i^T E[phi_i phi_j^T] w_j and, when given, sum_st W_st E[phi_i phi_j^T]_st,
// evaluated in column blocks without forming the r x r trig arrays.
struct PairMoments {
  double signal = 0.0;
  double weighted = 0.0;
};

PairMoments pair_moments(const OutputPredictor& pi, const OutputGeometry& gi, const OutputPredictor& pj,
                         const OutputGeometry& gj, const MatrixXd* weights);

// E[phi_i phi_j^T] assembled from PairTrig.
MatrixXd pair_t_matrix(const PairTrig& pt);

// sum_st W_st T_st, and optionally its gradient in mu and the full-matrix gradient in Sigma.
struct PairSum {
  double value = 0.0;
  VectorXd d_mu;
  MatrixXd d_sigma;
};

PairSum pair_sum(const PairTrig& pt, const MatrixXd& weights, const OutputPredictor& pi,
                 const OutputPredictor& pj, bool with_derivatives);

// Validated, symmetrized joint input.
JointInput checked_joint(const Predictor& pred, const JointInput& joint);

}  // namespace aptraj::detail
