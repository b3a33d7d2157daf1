#pragma once

#include <utility>

#include <Eigen/Dense>

namespace aptraj {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Eigenvalue floor used when repairing covariances to be positive semidefinite.
inline constexpr double kPsdFloor = 1e-12;

/// Number of entries in the upper-triangular half of an n-by-n matrix.
constexpr Index vech_size(Index n) { return n * (n + 1) / 2; }

/// Position of entry (i, j), i <= j, inside vech(): upper triangle, row-major.
constexpr Index vech_index(Index n, Index i, Index j) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

VectorXd vech(const MatrixXd& sym);
MatrixXd unvech(const VectorXd& v, Index n);

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Symmetrizes, then clamps eigenvalues below kPsdFloor up to kPsdFloor.
/// Matrices whose smallest eigenvalue already exceeds the floor are only symmetrized.
MatrixXd repair_psd(const MatrixXd& m);

/// True when m is symmetric to `sym_tol` and has no eigenvalue below -eig_tol.
bool is_symmetric_psd(const MatrixXd& m, double sym_tol = 1e-12, double eig_tol = 1e-10);

/// In-place rank-1 update of an upper-triangular Cholesky factor:
/// on return R^T R equals the old R^T R + x x^T. Uses Givens rotations, O(n^2).
void cholesky_rank1_update(MatrixXd& upper, VectorXd x);

/// Solves (R^T R) y = b for an upper-triangular R.
VectorXd cholesky_solve_upper(const MatrixXd& upper, const VectorXd& b);

/// Inverse of R^T R for an upper-triangular R.
MatrixXd cholesky_inverse_upper(const MatrixXd& upper);

}  // namespace aptraj
