#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "aptraj/inference.hpp"
#include "inference_detail.hpp"

namespace aptraj {

namespace {

// Sample statistics are accumulated around fixed shifts (the input mean and a
// pilot estimate of the output mean) to keep the sums well conditioned.
struct Accumulator {
  Index count = 0;
  VectorXd sum_m, sum_x, sum_v, sum_diag, sum_diag_sq;
  MatrixXd sum_mm, sum_mm_sq, sum_xm, sum_xm_sq;

  Accumulator(Index n, Index dim)
      : sum_m(VectorXd::Zero(n)), sum_x(VectorXd::Zero(dim)), sum_v(VectorXd::Zero(n)),
        sum_diag(VectorXd::Zero(n)), sum_diag_sq(VectorXd::Zero(n)), sum_mm(MatrixXd::Zero(n, n)),
        sum_mm_sq(MatrixXd::Zero(n, n)), sum_xm(MatrixXd::Zero(dim, n)), sum_xm_sq(MatrixXd::Zero(dim, n)) {}

  void add(const MatrixXd& ym, const MatrixXd& yx, const MatrixXd& v) {
    count += ym.rows();
    sum_m += ym.colwise().sum().transpose();
    sum_x += yx.colwise().sum().transpose();
    sum_v += v.colwise().sum().transpose();
    const MatrixXd ym2 = ym.array().square().matrix();
    const MatrixXd yx2 = yx.array().square().matrix();
    sum_mm += ym.transpose() * ym;
    sum_mm_sq += ym2.transpose() * ym2;
    sum_xm += yx.transpose() * ym;
    sum_xm_sq += yx2.transpose() * ym2;
    const MatrixXd diag = ym2 + v;
    sum_diag += diag.colwise().sum().transpose();
    sum_diag_sq += diag.array().square().matrix().colwise().sum().transpose();
  }
};

double standard_error(double sum, double sum_sq, double count) {
  const double mean = sum / count;
  return std::sqrt(std::max(sum_sq / count - mean * mean, 0.0) / count);
}

}  // namespace

MonteCarloMoments mc_moments(const Predictor& pred, const JointInput& joint_in, Index n_samples,
                             std::uint64_t seed) {
  if (n_samples < 2) throw std::invalid_argument("mc_moments: n_samples must be >= 2");
  const JointInput joint = detail::checked_joint(pred, joint_in);
  const Index n = pred.output_dim();
  const Index dim = pred.input_dim;

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(joint.sigma);
  const MatrixXd factor =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();  // Sigma = F F^T

  Index max_features = 1;
  for (const OutputPredictor& out : pred.outputs) max_features = std::max(max_features, 2 * out.r());
  const Index chunk = std::clamp<Index>(4'000'000 / max_features, 256, 65'536);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Accumulator acc(n, dim);
  VectorXd shift_m;

  MatrixXd z, x, ym(0, n), v(0, n);
  for (Index done = 0; done < n_samples;) {
    const Index rows = std::min(chunk, n_samples - done);
    z.resize(rows, dim);
    for (Index i = 0; i < rows; ++i)
      for (Index k = 0; k < dim; ++k) z(i, k) = normal(rng);
    MatrixXd yx = z * factor.transpose();  // x - mu
    x = yx.rowwise() + joint.mu.transpose();
    ym.resize(rows, n);
    v.resize(rows, n);
    for (Index d = 0; d < n; ++d) {
      const OutputPredictor& out = pred.outputs[d];
      const Index r = out.r();
      const MatrixXd ang = x * out.omega.transpose();
      MatrixXd phi(rows, 2 * r);
      phi.leftCols(r) = out.amp * ang.array().cos();
      phi.rightCols(r) = out.amp * ang.array().sin();
      ym.col(d) = (phi * out.w).array() + out.offset;
      v.col(d) = out.noise_var * (1.0 + ((phi * out.noise_quad).cwiseProduct(phi)).rowwise().sum().array());
    }
    if (done == 0) shift_m = ym.colwise().mean().transpose();
    ym.rowwise() -= shift_m.transpose();
    acc.add(ym, yx, v);
    done += rows;
  }

  const double cnt = static_cast<double>(acc.count);
  const VectorXd dm = acc.sum_m / cnt;
  const VectorXd dx = acc.sum_x / cnt;
  MonteCarloMoments res;
  res.samples = acc.count;
  OutputMoments& mom = res.moments;
  OutputMoments& se = res.standard_errors;
  mom.mu_f = shift_m + dm;
  mom.sigma_f = (acc.sum_mm - cnt * dm * dm.transpose()) / (cnt - 1.0);
  mom.sigma_f.diagonal() += acc.sum_v / cnt;
  mom.sigma_xf = (acc.sum_xm - cnt * dx * dm.transpose()) / (cnt - 1.0);

  se.mu_f.resize(n);
  se.sigma_f.resize(n, n);
  se.sigma_xf.resize(dim, n);
  for (Index i = 0; i < n; ++i) {
    se.mu_f(i) = standard_error(acc.sum_m(i), acc.sum_mm(i, i), cnt);
    for (Index j = 0; j < n; ++j)
      se.sigma_f(i, j) = i == j ? standard_error(acc.sum_diag(i), acc.sum_diag_sq(i), cnt)
                                : standard_error(acc.sum_mm(i, j), acc.sum_mm_sq(i, j), cnt);
    for (Index k = 0; k < dim; ++k)
      se.sigma_xf(k, i) = standard_error(acc.sum_xm(k, i), acc.sum_xm_sq(k, i), cnt);
  }
  return res;
}

}  // namespace aptraj
