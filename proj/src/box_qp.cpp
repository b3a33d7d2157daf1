#include "aptraj/box_qp.hpp"

#include <cmath>
#include <stdexcept>

namespace aptraj {

namespace {

double objective(const MatrixXd& H, const VectorXd& g, const VectorXd& x) {
  return 0.5 * x.dot(H * x) + g.dot(x);
}

std::vector<Index> indices_of(const std::vector<bool>& mask, bool value) {
  std::vector<Index> idx;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] == value) idx.push_back(static_cast<Index>(i));
  return idx;
}

MatrixXd sub_matrix(const MatrixXd& H, const std::vector<Index>& idx) {
  const Index k = static_cast<Index>(idx.size());
  MatrixXd s(k, k);
  for (Index a = 0; a < k; ++a)
    for (Index b = 0; b < k; ++b) s(a, b) = H(idx[a], idx[b]);
  return s;
}

std::vector<bool> free_set(const VectorXd& x, const VectorXd& grad, const VectorXd& lo, const VectorXd& hi) {
  std::vector<bool> free(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const bool clamped = (x(i) <= lo(i) && grad(i) > 0.0) || (x(i) >= hi(i) && grad(i) < 0.0);
    free[i] = !clamped;
  }
  return free;
}

}  // namespace

BoxQpResult box_qp(const MatrixXd& H, const VectorXd& g, const VectorXd& lo, const VectorXd& hi,
                   const VectorXd& x0) {
  const Index m = g.size();
  if (H.rows() != m || H.cols() != m || lo.size() != m || hi.size() != m || x0.size() != m)
    throw std::invalid_argument("box_qp: dimension mismatch");
  for (Index i = 0; i < m; ++i)
    if (!(lo(i) <= hi(i))) throw std::invalid_argument("box_qp: empty box");

  BoxQpResult res;
  VectorXd x = x0.cwiseMax(lo).cwiseMin(hi);
  std::vector<bool> prev_free;
  constexpr int kMaxIters = 200;
  constexpr double kArmijo = 0.1;

  for (int it = 0; it < kMaxIters; ++it) {
    res.iterations = it + 1;
    const VectorXd grad = g + H * x;
    const std::vector<bool> free = free_set(x, grad, lo, hi);
    const std::vector<Index> fi = indices_of(free, true);
    if (fi.empty()) break;

    Eigen::LLT<MatrixXd> llt(sub_matrix(H, fi));
    if (llt.info() != Eigen::Success) throw std::invalid_argument("box_qp: H is not positive definite");
    VectorXd grad_f(static_cast<Index>(fi.size()));
    for (std::size_t a = 0; a < fi.size(); ++a) grad_f(a) = grad(fi[a]);
    if (grad_f.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + g.cwiseAbs().maxCoeff())) break;

    VectorXd dir = VectorXd::Zero(m);
    const VectorXd step_f = -llt.solve(grad_f);
    for (std::size_t a = 0; a < fi.size(); ++a) dir(fi[a]) = step_f(a);

    const double f0 = objective(H, g, x);
    double step = 1.0;
    bool accepted = false;
    VectorXd cand;
    double fc = f0;
    for (int ls = 0; ls < 50; ++ls, step *= 0.5) {
      cand = (x + step * dir).cwiseMax(lo).cwiseMin(hi);
      fc = objective(H, g, cand);
      if (fc <= f0 + kArmijo * grad.dot(cand - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const bool stalled = (cand - x).cwiseAbs().maxCoeff() == 0.0;
    x = cand;
    if (stalled || (free == prev_free && f0 - fc <= 1e-16 * (1.0 + std::abs(f0)) && step == 1.0)) break;
    prev_free = free;
  }

  const VectorXd grad = g + H * x;
  res.free = free_set(x, grad, lo, hi);
  const std::vector<Index> fi = indices_of(res.free, true);
  if (!fi.empty()) {
    res.free_factor.compute(sub_matrix(H, fi));
    if (res.free_factor.info() != Eigen::Success)
      throw std::invalid_argument("box_qp: H is not positive definite");
  }
  res.x = x;
  return res;
}

double box_qp_kkt_residual(const MatrixXd& H, const VectorXd& g, const VectorXd& lo, const VectorXd& hi,
                           const VectorXd& x) {
  const VectorXd grad = g + H * x;
  double res = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    res = std::max(res, std::max(lo(i) - x(i), x(i) - hi(i)));
    if (x(i) <= lo(i))
      res = std::max(res, -grad(i));
    else if (x(i) >= hi(i))
      res = std::max(res, grad(i));
    else
      res = std::max(res, std::abs(grad(i)));
  }
  return res;
}

}  // namespace aptraj
