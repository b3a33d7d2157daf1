#include <stdexcept>

#include "aptraj/inference.hpp"
#include "inference_detail.hpp"

namespace aptraj {

namespace {

void allocate(MomentDerivatives& d, Index n, Index dim) {
  d.dmu_dmu = MatrixXd::Zero(n, dim);
  d.dmu_dsigma = MatrixXd::Zero(n, dim * dim);
  d.dsigma_f_dmu = MatrixXd::Zero(n * n, dim);
  d.dsigma_f_dsigma = MatrixXd::Zero(n * n, dim * dim);
  d.dsigma_xf_dmu = MatrixXd::Zero(dim * n, dim);
  d.dsigma_xf_dsigma = MatrixXd::Zero(dim * n, dim * dim);
}

Eigen::Map<const Eigen::RowVectorXd> flat(const MatrixXd& m) {
  return Eigen::Map<const Eigen::RowVectorXd>(m.data(), m.size());
}

void set_sigma_f_entry(MomentDerivatives& d, Index n, Index i, Index j, const VectorXd& dmu,
                       const MatrixXd& dsigma_full) {
  const MatrixXd ds = symmetrize(dsigma_full);
  d.dsigma_f_dmu.row(i + n * j) = dmu.transpose();
  d.dsigma_f_dsigma.row(i + n * j) = flat(ds);
  if (i != j) {
    d.dsigma_f_dmu.row(j + n * i) = dmu.transpose();
    d.dsigma_f_dsigma.row(j + n * i) = flat(ds);
  }
}

// Entry (k, d) of Sigma * g where g depends on the inputs only through `g_dmu` (its mu-Jacobian,
// D x D) and a per-frequency coefficient c with d g / d Sigma_ab = -1/2 sum_i c_i omega_i omega_ia omega_ib.
// When c is empty the second contribution vanishes.
void set_cross_block(MomentDerivatives& d, Index dim, Index out, const MatrixXd& sigma,
                     const VectorXd& g, const MatrixXd& g_dmu, const MatrixXd* omega, const VectorXd* c) {
  const MatrixXd sh = sigma * g_dmu;
  MatrixXd omega_sigma;
  if (omega) omega_sigma = (*omega) * sigma;  // r x D, row i = (Sigma omega_i)^T
  for (Index k = 0; k < dim; ++k) {
    const Index row = k + dim * out;
    d.dsigma_xf_dmu.row(row) = sh.row(k);
    MatrixXd full = MatrixXd::Zero(dim, dim);
    full.row(k) = g.transpose();  // delta_ka g_b
    if (omega) {
      const VectorXd wk = -0.5 * c->cwiseProduct(omega_sigma.col(k));
      full += omega->transpose() * wk.asDiagonal() * (*omega);
    }
    d.dsigma_xf_dsigma.row(row) = flat(symmetrize(full));
  }
}

}  // namespace

MomentsWithDerivatives emm_derivatives(const Predictor& pred, const JointInput& joint_in) {
  const JointInput joint = detail::checked_joint(pred, joint_in);
  const Index n = pred.output_dim();
  const Index dim = pred.input_dim;

  MomentsWithDerivatives res;
  OutputMoments& mom = res.moments;
  MomentDerivatives& der = res.derivatives;
  allocate(der, n, dim);
  mom.mu_f.resize(n);
  mom.sigma_f.resize(n, n);
  mom.sigma_xf.resize(dim, n);

  std::vector<detail::OutputGeometry> geo;
  for (const OutputPredictor& out : pred.outputs) geo.push_back(detail::output_geometry(out, joint));

  VectorXd m(n);
  std::vector<VectorXd> grad(n);      // d m / d mu
  std::vector<MatrixXd> half_hess(n); // d m / d Sigma (full matrix) = 1/2 Hessian of m
  for (Index d = 0; d < n; ++d) {
    const OutputPredictor& out = pred.outputs[d];
    const detail::OutputGeometry& g = geo[d];
    const Index r = out.r();
    const auto wc = out.w.head(r);
    const auto ws = out.w.tail(r);
    m(d) = out.amp * (wc.dot(g.ec) + ws.dot(g.es));
    mom.mu_f(d) = out.offset + m(d);
    const VectorXd c = out.amp * (ws.cwiseProduct(g.ec) - wc.cwiseProduct(g.es));
    const VectorXd h = -out.amp * (wc.cwiseProduct(g.ec) + ws.cwiseProduct(g.es));
    grad[d] = out.omega.transpose() * c;
    const MatrixXd hess = out.omega.transpose() * h.asDiagonal() * out.omega;
    half_hess[d] = 0.5 * hess;
    mom.sigma_xf.col(d) = joint.sigma * grad[d];

    der.dmu_dmu.row(d) = grad[d].transpose();
    der.dmu_dsigma.row(d) = flat(half_hess[d]);
    set_cross_block(der, dim, d, joint.sigma, grad[d], hess, &out.omega, &c);
  }

  for (Index i = 0; i < n; ++i) {
    const OutputPredictor& pi = pred.outputs[i];
    for (Index j = i; j < n; ++j) {
      const OutputPredictor& pj = pred.outputs[j];
      const detail::PairTrig pt = detail::pair_trig(pi, geo[i], pj, geo[j]);
      if (i == j) {
        const detail::PairSum noise = detail::pair_sum(pt, pi.noise_quad, pi, pi, true);
        const detail::PairSum signal = detail::pair_sum(pt, pi.w * pi.w.transpose(), pi, pi, true);
        mom.sigma_f(i, i) = pi.noise_var * (1.0 + noise.value) + (signal.value - m(i) * m(i));
        const VectorXd dmu = pi.noise_var * noise.d_mu + signal.d_mu - 2.0 * m(i) * grad[i];
        const MatrixXd ds = pi.noise_var * noise.d_sigma + signal.d_sigma - 2.0 * m(i) * half_hess[i];
        set_sigma_f_entry(der, n, i, i, dmu, ds);
      } else {
        const detail::PairSum signal = detail::pair_sum(pt, pi.w * pj.w.transpose(), pi, pj, true);
        mom.sigma_f(i, j) = mom.sigma_f(j, i) = signal.value - m(i) * m(j);
        const VectorXd dmu = signal.d_mu - m(i) * grad[j] - m(j) * grad[i];
        const MatrixXd ds = signal.d_sigma - m(i) * half_hess[j] - m(j) * half_hess[i];
        set_sigma_f_entry(der, n, i, j, dmu, ds);
      }
    }
  }
  return res;
}

MomentsWithDerivatives lin_derivatives(const Predictor& pred, const JointInput& joint_in) {
  const JointInput joint = detail::checked_joint(pred, joint_in);
  const Index n = pred.output_dim();
  const Index dim = pred.input_dim;

  MomentsWithDerivatives res;
  OutputMoments& mom = res.moments;
  MomentDerivatives& der = res.derivatives;
  allocate(der, n, dim);
  mom.mu_f.resize(n);

  MatrixXd slopes(dim, n);
  VectorXd noise(n);
  std::vector<MatrixXd> hess(n);
  std::vector<VectorXd> noise_grad(n);
  for (Index d = 0; d < n; ++d) {
    const OutputPredictor& out = pred.outputs[d];
    const Index r = out.r();
    const VectorXd ang = out.omega * joint.mu;
    const VectorXd cs = out.amp * ang.array().cos();
    const VectorXd sn = out.amp * ang.array().sin();
    VectorXd phi(2 * r);
    phi << cs, sn;
    const auto wc = out.w.head(r);
    const auto ws = out.w.tail(r);
    mom.mu_f(d) = out.offset + out.w.dot(phi);
    slopes.col(d) = out.omega.transpose() * (ws.cwiseProduct(cs) - wc.cwiseProduct(sn));
    const VectorXd h = -(wc.cwiseProduct(cs) + ws.cwiseProduct(sn));
    hess[d] = out.omega.transpose() * h.asDiagonal() * out.omega;
    const VectorXd y = out.noise_quad * phi;
    noise(d) = out.noise_var * (1.0 + phi.dot(y));
    // Jacobian of phi applied to y: cos rows carry -sin, sin rows carry +cos.
    noise_grad[d] = 2.0 * out.noise_var *
                    (out.omega.transpose() * (cs.cwiseProduct(y.tail(r)) - sn.cwiseProduct(y.head(r))));
    der.dmu_dmu.row(d) = slopes.col(d).transpose();
    set_cross_block(der, dim, d, joint.sigma, slopes.col(d), hess[d], nullptr, nullptr);
  }
  mom.sigma_xf = joint.sigma * slopes;
  mom.sigma_f = symmetrize(slopes.transpose() * mom.sigma_xf);
  mom.sigma_f.diagonal() += noise;

  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) {
      VectorXd dmu = hess[i] * mom.sigma_xf.col(j) + hess[j] * mom.sigma_xf.col(i);
      if (i == j) dmu += noise_grad[i];
      const MatrixXd ds = slopes.col(i) * slopes.col(j).transpose();
      set_sigma_f_entry(der, n, i, j, dmu, ds);
    }
  return res;
}

MomentsWithDerivatives compute_derivatives(const Predictor& pred, const JointInput& joint,
                                           InferenceMethod method) {
  return method == InferenceMethod::kExactMoments ? emm_derivatives(pred, joint)
                                                  : lin_derivatives(pred, joint);
}

}  // namespace aptraj
