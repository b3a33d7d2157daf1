#pragma once

#include <vector>

#include "aptraj/linalg.hpp"

namespace aptraj {

struct BoxQpResult {
  VectorXd x;
  std::vector<bool> free;           // coordinates not held at a bound
  Eigen::LLT<MatrixXd> free_factor; // Cholesky factor of H restricted to the free set
  int iterations = 0;
};

/// Projected-Newton minimization of 1/2 x^T H x + g^T x subject to lo <= x <= hi,
/// started from the projection of x0. Throws std::invalid_argument when H is not
/// positive definite on a free subspace or the box is empty.
BoxQpResult box_qp(const MatrixXd& H, const VectorXd& g, const VectorXd& lo, const VectorXd& hi,
                   const VectorXd& x0);

/// Max violation of the box-constrained KKT conditions at x.
double box_qp_kkt_residual(const MatrixXd& H, const VectorXd& g, const VectorXd& lo,
                           const VectorXd& hi, const VectorXd& x);

}  // namespace aptraj
