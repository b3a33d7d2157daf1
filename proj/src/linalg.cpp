#include "aptraj/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace aptraj {

VectorXd vech(const MatrixXd& sym) {
  const Index n = sym.rows();
  VectorXd v(vech_size(n));
  Index k = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) v(k++) = sym(i, j);
  return v;
}

MatrixXd unvech(const VectorXd& v, Index n) {
  if (v.size() != vech_size(n)) throw std::invalid_argument("unvech: size mismatch");
  MatrixXd m(n, n);
  Index k = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) {
      m(i, j) = v(k);
      m(j, i) = v(k);
      ++k;
    }
  return m;
}

MatrixXd repair_psd(const MatrixXd& m) {
  MatrixXd s = symmetrize(m);
  if (s.size() == 0) return s;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) throw std::runtime_error("repair_psd: eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() >= kPsdFloor) return s;
  VectorXd lambda = eig.eigenvalues().cwiseMax(kPsdFloor);
  MatrixXd out = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  return symmetrize(out);
}

bool is_symmetric_psd(const MatrixXd& m, double sym_tol, double eig_tol) {
  if (m.rows() != m.cols()) return false;
  if (!m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale) return false;
  if (m.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrize(m), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -eig_tol;
}

void cholesky_rank1_update(MatrixXd& upper, VectorXd x) {
  const Index n = upper.rows();
  if (upper.cols() != n || x.size() != n)
    throw std::invalid_argument("cholesky_rank1_update: dimension mismatch");
  for (Index k = 0; k < n; ++k) {
    const double rkk = upper(k, k);
    const double r = std::hypot(rkk, x(k));
    if (!(r > 0.0)) continue;
    const double c = rkk / r;
    const double s = x(k) / r;
    upper(k, k) = r;
    x(k) = 0.0;
    for (Index j = k + 1; j < n; ++j) {
      const double rkj = upper(k, j);
      const double xj = x(j);
      upper(k, j) = c * rkj + s * xj;
      x(j) = -s * rkj + c * xj;
    }
  }
}

VectorXd cholesky_solve_upper(const MatrixXd& upper, const VectorXd& b) {
  VectorXd y = upper.transpose().triangularView<Eigen::Lower>().solve(b);
  return upper.triangularView<Eigen::Upper>().solve(y);
}

MatrixXd cholesky_inverse_upper(const MatrixXd& upper) {
  const Index n = upper.rows();
  MatrixXd rinv = upper.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(n, n));
  MatrixXd inv = rinv * rinv.transpose();
  return symmetrize(inv);
}

}  // namespace aptraj
