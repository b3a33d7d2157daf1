#include "aptraj/inference.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "aptraj/ssgp_io.hpp"
#include "inference_detail.hpp"

namespace aptraj {

const char* to_string(InferenceMethod m) {
  return m == InferenceMethod::kExactMoments ? "emm" : "lin";
}

InferenceMethod inference_method_from_string(const std::string& s) {
  if (s == "emm" || s == "EMM") return InferenceMethod::kExactMoments;
  if (s == "lin" || s == "LIN") return InferenceMethod::kLinearized;
  throw std::invalid_argument("unknown inference method '" + s + "' (expected emm or lin)");
}

JointInput make_joint(const Belief& belief, const VectorXd& u) {
  const Index n = belief.dim();
  const Index m = u.size();
  if (belief.sigma.rows() != n || belief.sigma.cols() != n)
    throw std::invalid_argument("make_joint: belief covariance shape mismatch");
  JointInput j;
  j.mu.resize(n + m);
  j.mu << belief.mu, u;
  j.sigma = MatrixXd::Zero(n + m, n + m);
  j.sigma.topLeftCorner(n, n) = belief.sigma;
  return j;
}

Predictor make_predictor(const SSGPModel& model) {
  if (!model.trained()) throw std::logic_error("make_predictor: model is not trained");
  Predictor p;
  p.input_dim = model.input_dim;
  for (const OutputModel& out : model.outputs) {
    OutputPredictor op;
    op.omega = out.map.frequencies();
    op.w = out.w;
    op.amp = out.hyper.sigma_f / std::sqrt(static_cast<double>(out.map.r));
    op.noise_var = out.hyper.sigma_n * out.hyper.sigma_n;
    op.noise_quad = cholesky_inverse_upper(out.chol_a) / model.num_offline;
    op.offset = out.target_mean;
    p.outputs.push_back(std::move(op));
  }
  return p;
}

PointPrediction predict_point(const Predictor& pred, const VectorXd& x) {
  if (x.size() != pred.input_dim) throw std::invalid_argument("predict_point: input dimension mismatch");
  const Index n = pred.output_dim();
  PointPrediction p{VectorXd(n), VectorXd(n)};
  for (Index d = 0; d < n; ++d) {
    const OutputPredictor& out = pred.outputs[d];
    const Index r = out.r();
    const VectorXd ang = out.omega * x;
    VectorXd phi(2 * r);
    phi.head(r) = out.amp * ang.array().cos();
    phi.tail(r) = out.amp * ang.array().sin();
    p.mean(d) = out.offset + out.w.dot(phi);
    p.variance(d) = out.noise_var * (1.0 + phi.dot(out.noise_quad * phi));
  }
  return p;
}

namespace detail {

double damped(double variance_term) { return std::exp(std::max(-0.5 * variance_term, -700.0)); }

JointInput checked_joint(const Predictor& pred, const JointInput& joint) {
  const Index dim = pred.input_dim;
  if (joint.mu.size() != dim || joint.sigma.rows() != dim || joint.sigma.cols() != dim)
    throw std::invalid_argument("joint input dimension does not match the model");
  if (!joint.mu.allFinite() || !joint.sigma.allFinite())
    throw std::invalid_argument("joint input has non-finite entries");
  const double scale = std::max(1.0, joint.sigma.cwiseAbs().maxCoeff());
  if ((joint.sigma - joint.sigma.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument("joint covariance is not symmetric");
  JointInput out{joint.mu, symmetrize(joint.sigma)};
  if (dim > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(out.sigma, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues()(0) < -1e-10 * scale)
      throw std::invalid_argument("joint covariance is not positive semidefinite");
  }
  return out;
}

OutputGeometry output_geometry(const OutputPredictor& out, const JointInput& joint) {
  OutputGeometry g;
  g.a = out.omega * joint.mu;
  g.omega_sigma = out.omega * joint.sigma;
  g.v = g.omega_sigma.cwiseProduct(out.omega).rowwise().sum();
  const Index r = out.r();
  g.ec.resize(r);
  g.es.resize(r);
  for (Index i = 0; i < r; ++i) {
    const double e = damped(g.v(i));
    g.ec(i) = e * std::cos(g.a(i));
    g.es(i) = e * std::sin(g.a(i));
  }
  return g;
}

PairTrig pair_trig(const OutputPredictor& pi, const OutputGeometry& gi, const OutputPredictor& pj,
                   const OutputGeometry& gj) {
  const Index ri = pi.r(), rj = pj.r();
  const MatrixXd cross = gi.omega_sigma * pj.omega.transpose();  // omega_i Sigma omega_j^T
  const VectorXd ci = gi.a.array().cos().matrix(), si = gi.a.array().sin().matrix();
  const VectorXd cj = gj.a.array().cos().matrix(), sj = gj.a.array().sin().matrix();
  // Angle-sum identities keep the r^2 loop free of trig calls.
  const Eigen::ArrayXXd cc = (ci * cj.transpose()).array(), ss = (si * sj.transpose()).array();
  const Eigen::ArrayXXd sc = (si * cj.transpose()).array(), cs = (ci * sj.transpose()).array();
  const Eigen::ArrayXXd half_v =
      -0.5 * (gi.v.replicate(1, rj) + gj.v.transpose().replicate(ri, 1)).array();
  const Eigen::ArrayXXd e1 = (half_v - cross.array()).max(-700.0).exp();
  const Eigen::ArrayXXd e2 = (half_v + cross.array()).max(-700.0).exp();
  PairTrig pt;
  pt.k = 0.5 * pi.amp * pj.amp;
  pt.c1 = e1 * (cc - ss);
  pt.s1 = e1 * (sc + cs);
  pt.c2 = e2 * (cc + ss);
  pt.s2 = e2 * (sc - cs);
  return pt;
}

PairMoments pair_moments(const OutputPredictor& pi, const OutputGeometry& gi, const OutputPredictor& pj,
                         const OutputGeometry& gj, const MatrixXd* weights) {
  constexpr Index kBlock = 32;
  const Index ri = pi.r(), rj = pj.r();
  const Eigen::ArrayXd ci = gi.a.array().cos(), si = gi.a.array().sin();
  const Eigen::ArrayXd cj = gj.a.array().cos(), sj = gj.a.array().sin();
  // Rank-one weights w_i w_j^T collapse onto e1 + e2 and e2 - e1.
  const VectorXd p_i = (pi.w.head(ri).array() * ci + pi.w.tail(ri).array() * si).matrix();
  const VectorXd q_i = (pi.w.head(ri).array() * si - pi.w.tail(ri).array() * ci).matrix();
  const VectorXd p_j = (pj.w.head(rj).array() * cj + pj.w.tail(rj).array() * sj).matrix();
  const VectorXd q_j = (pj.w.head(rj).array() * sj - pj.w.tail(rj).array() * cj).matrix();
  const Eigen::ArrayXXd vi = -0.5 * gi.v.array().replicate(1, kBlock);
  PairMoments out;
  for (Index t0 = 0; t0 < rj; t0 += kBlock) {
    const Index nb = std::min(kBlock, rj - t0);
    const Eigen::ArrayXXd cross = (gi.omega_sigma * pj.omega.middleRows(t0, nb).transpose()).array();
    const Eigen::ArrayXXd half_v =
        vi.leftCols(nb) - 0.5 * gj.v.segment(t0, nb).transpose().array().replicate(ri, 1);
    const Eigen::ArrayXXd e1 = (half_v - cross).max(-700.0).exp();
    const Eigen::ArrayXXd e2 = (half_v + cross).max(-700.0).exp();
    const Eigen::ArrayXXd ep = e1 + e2, em = e2 - e1;
    out.signal += p_i.dot(ep.matrix() * p_j.segment(t0, nb)) + q_i.dot(em.matrix() * q_j.segment(t0, nb));
    if (!weights) continue;
    const auto cjb = cj.segment(t0, nb).transpose(), sjb = sj.segment(t0, nb).transpose();
    const Eigen::ArrayXXd cc = ci.replicate(1, nb).rowwise() * cjb, ss = si.replicate(1, nb).rowwise() * sjb;
    const Eigen::ArrayXXd sc = si.replicate(1, nb).rowwise() * cjb, cs = ci.replicate(1, nb).rowwise() * sjb;
    const MatrixXd& w = *weights;
    out.weighted += (w.block(0, t0, ri, nb).array() * (ep * cc + em * ss)).sum() +
                    (w.block(0, rj + t0, ri, nb).array() * (ep * cs - em * sc)).sum() +
                    (w.block(ri, t0, ri, nb).array() * (ep * sc - em * cs)).sum() +
                    (w.block(ri, rj + t0, ri, nb).array() * (em * cc + ep * ss)).sum();
  }
  const double k = 0.5 * pi.amp * pj.amp;
  out.signal *= k;
  out.weighted *= k;
  return out;
}

MatrixXd pair_t_matrix(const PairTrig& pt) {
  const Index ri = pt.c1.rows(), rj = pt.c1.cols();
  MatrixXd t(2 * ri, 2 * rj);
  t.topLeftCorner(ri, rj) = pt.k * (pt.c1 + pt.c2).matrix();
  t.topRightCorner(ri, rj) = pt.k * (pt.s1 - pt.s2).matrix();
  t.bottomLeftCorner(ri, rj) = pt.k * (pt.s1 + pt.s2).matrix();
  t.bottomRightCorner(ri, rj) = pt.k * (pt.c2 - pt.c1).matrix();
  return t;
}

PairSum pair_sum(const PairTrig& pt, const MatrixXd& weights, const OutputPredictor& pi,
                 const OutputPredictor& pj, bool with_derivatives) {
  const Index ri = pt.c1.rows(), rj = pt.c1.cols();
  const auto wcc = weights.topLeftCorner(ri, rj).array();
  const auto wcs = weights.topRightCorner(ri, rj).array();
  const auto wsc = weights.bottomLeftCorner(ri, rj).array();
  const auto wss = weights.bottomRightCorner(ri, rj).array();

  PairSum out;
  out.value = pt.k * (wcc * (pt.c1 + pt.c2) + wcs * (pt.s1 - pt.s2) + wsc * (pt.s1 + pt.s2) +
                      wss * (pt.c2 - pt.c1))
                         .sum();
  if (!with_derivatives) return out;

  // Each T entry is a combination of damped cos/sin at theta1 and theta2:
  //   d/dmu ec(theta) = -es(theta) theta,  d/dmu es(theta) = ec(theta) theta,
  //   d/dSigma {ec, es}(theta) = -1/2 {ec, es}(theta) theta theta^T.
  const Eigen::ArrayXXd alpha1 = pt.k * (-wcc * pt.s1 + wcs * pt.c1 + wsc * pt.c1 + wss * pt.s1);
  const Eigen::ArrayXXd alpha2 = pt.k * (-wcc * pt.s2 - wcs * pt.c2 + wsc * pt.c2 - wss * pt.s2);
  const Eigen::ArrayXXd beta1 = -0.5 * pt.k * (wcc * pt.c1 + wcs * pt.s1 + wsc * pt.s1 - wss * pt.c1);
  const Eigen::ArrayXXd beta2 = -0.5 * pt.k * (wcc * pt.c2 - wcs * pt.s2 + wsc * pt.s2 + wss * pt.c2);

  out.d_mu = pi.omega.transpose() * (alpha1 + alpha2).rowwise().sum().matrix() +
             pj.omega.transpose() * (alpha1 - alpha2).colwise().sum().transpose().matrix();

  const Eigen::ArrayXXd bsum = beta1 + beta2;
  const VectorXd row_w = bsum.rowwise().sum().matrix();
  const VectorXd col_w = bsum.colwise().sum().transpose().matrix();
  const MatrixXd cross = pi.omega.transpose() * (beta1 - beta2).matrix() * pj.omega;
  out.d_sigma = pi.omega.transpose() * row_w.asDiagonal() * pi.omega +
                pj.omega.transpose() * col_w.asDiagonal() * pj.omega + cross + cross.transpose();
  return out;
}

}  // namespace detail

OutputMoments emm_moments(const Predictor& pred, const JointInput& joint_in) {
  const JointInput joint = detail::checked_joint(pred, joint_in);
  const Index n = pred.output_dim();
  const Index dim = pred.input_dim;

  std::vector<detail::OutputGeometry> geo;
  geo.reserve(n);
  for (const OutputPredictor& out : pred.outputs) geo.push_back(detail::output_geometry(out, joint));

  OutputMoments mom;
  mom.mu_f.resize(n);
  mom.sigma_f.resize(n, n);
  mom.sigma_xf.resize(dim, n);
  VectorXd m(n);
  for (Index d = 0; d < n; ++d) {
    const OutputPredictor& out = pred.outputs[d];
    const detail::OutputGeometry& g = geo[d];
    const Index r = out.r();
    m(d) = out.amp * (out.w.head(r).dot(g.ec) + out.w.tail(r).dot(g.es));
    mom.mu_f(d) = out.offset + m(d);
    const VectorXd c = out.amp * (out.w.tail(r).cwiseProduct(g.ec) - out.w.head(r).cwiseProduct(g.es));
    mom.sigma_xf.col(d) = g.omega_sigma.transpose() * c;
  }

  for (Index i = 0; i < n; ++i) {
    const OutputPredictor& pi = pred.outputs[i];
    for (Index j = i; j < n; ++j) {
      const OutputPredictor& pj = pred.outputs[j];
      const detail::PairMoments pm = detail::pair_moments(pi, geo[i], pj, geo[j], i == j ? &pi.noise_quad : nullptr);
      if (i == j) mom.sigma_f(i, i) = pi.noise_var * (1.0 + pm.weighted) + (pm.signal - m(i) * m(i));
      else mom.sigma_f(i, j) = mom.sigma_f(j, i) = pm.signal - m(i) * m(j);
    }
  }
  return mom;
}

OutputMoments lin_moments(const Predictor& pred, const JointInput& joint_in) {
  const JointInput joint = detail::checked_joint(pred, joint_in);
  const Index n = pred.output_dim();
  const Index dim = pred.input_dim;
  OutputMoments mom;
  mom.mu_f.resize(n);
  mom.sigma_f.resize(n, n);
  MatrixXd slopes(dim, n);
  VectorXd noise(n);
  for (Index d = 0; d < n; ++d) {
    const OutputPredictor& out = pred.outputs[d];
    const Index r = out.r();
    const VectorXd ang = out.omega * joint.mu;
    VectorXd phi(2 * r);
    phi.head(r) = out.amp * ang.array().cos();
    phi.tail(r) = out.amp * ang.array().sin();
    mom.mu_f(d) = out.offset + out.w.dot(phi);
    const VectorXd c = out.w.tail(r).cwiseProduct(phi.head(r)) - out.w.head(r).cwiseProduct(phi.tail(r));
    slopes.col(d) = out.omega.transpose() * c;
    noise(d) = out.noise_var * (1.0 + phi.dot(out.noise_quad * phi));
  }
  mom.sigma_xf = joint.sigma * slopes;
  mom.sigma_f = slopes.transpose() * mom.sigma_xf;
  mom.sigma_f = symmetrize(mom.sigma_f);
  mom.sigma_f.diagonal() += noise;
  return mom;
}

OutputMoments compute_moments(const Predictor& pred, const JointInput& joint, InferenceMethod method) {
  return method == InferenceMethod::kExactMoments ? emm_moments(pred, joint) : lin_moments(pred, joint);
}

Belief propagate_belief(const Predictor& pred, const Belief& belief, const VectorXd& u,
                        InferenceMethod method) {
  const Index n = belief.dim();
  if (pred.output_dim() != n || pred.input_dim != n + u.size())
    throw std::invalid_argument("propagate_belief: belief/control dimensions do not match the model");
  if (!u.allFinite()) throw std::invalid_argument("propagate_belief: non-finite control");
  const OutputMoments mom = compute_moments(pred, make_joint(belief, u), method);
  const MatrixXd c = mom.sigma_xf.topRows(n);
  Belief next;
  next.mu = belief.mu + mom.mu_f;
  next.sigma = repair_psd(belief.sigma + mom.sigma_f + c + c.transpose());
  return next;
}

InferenceWorkspace inference_workspace(const Predictor& pred, const JointInput& joint_in, Index output) {
  const JointInput joint = detail::checked_joint(pred, joint_in);
  if (output < 0 || output >= pred.output_dim())
    throw std::invalid_argument("inference_workspace: output index out of range");
  const OutputPredictor& out = pred.outputs[output];
  const Index r = out.r();
  const Index dim = pred.input_dim;
  const detail::OutputGeometry g = detail::output_geometry(out, joint);

  InferenceWorkspace ws;
  ws.output = output;
  ws.es = g.es;
  ws.ec = g.ec;
  ws.q.resize(2 * r);
  ws.q << out.amp * g.ec, out.amp * g.es;
  ws.S = out.noise_var * out.noise_quad + out.w * out.w.transpose();
  for (Index j = 0; j < pred.output_dim(); ++j) {
    const detail::OutputGeometry gj = detail::output_geometry(pred.outputs[j], joint);
    ws.t_cross.push_back(detail::pair_t_matrix(detail::pair_trig(out, g, pred.outputs[j], gj)));
  }
  ws.T = ws.t_cross[output];

  // E[phi_i x] = E[phi_i] mu + Sigma E[grad phi_i].
  ws.P.resize(dim, 2 * r);
  for (Index i = 0; i < r; ++i) {
    ws.P.col(i) = ws.q(i) * joint.mu - out.amp * g.es(i) * g.omega_sigma.row(i).transpose();
    ws.P.col(r + i) = ws.q(r + i) * joint.mu + out.amp * g.ec(i) * g.omega_sigma.row(i).transpose();
  }

  ws.theta1.resize(r * r, dim);
  ws.theta2.resize(r * r, dim);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < r; ++j) {
      ws.theta1.row(i * r + j) = out.omega.row(i) + out.omega.row(j);
      ws.theta2.row(i * r + j) = out.omega.row(i) - out.omega.row(j);
    }

  const VectorXd ang = g.a;
  VectorXd phi(2 * r);
  phi.head(r) = out.amp * ang.array().cos();
  phi.tail(r) = out.amp * ang.array().sin();
  ws.D.resize(dim, 2 * r);
  for (Index i = 0; i < r; ++i) {
    ws.D.col(i) = -phi(r + i) * out.omega.row(i).transpose();
    ws.D.col(r + i) = phi(i) * out.omega.row(i).transpose();
  }
  ws.a = ws.D * out.w;
  ws.b = out.offset + out.w.dot(phi) - ws.a.dot(joint.mu);
  return ws;
}

nlohmann::json workspace_to_json(const InferenceWorkspace& ws) {
  nlohmann::json tij = nlohmann::json::array();
  for (const MatrixXd& t : ws.t_cross) tij.push_back(matrix_to_json(t));
  return nlohmann::json{{"output", ws.output},           {"q", vector_to_json(ws.q)},
                        {"S", matrix_to_json(ws.S)},     {"T", matrix_to_json(ws.T)},
                        {"Tij", std::move(tij)},         {"P", matrix_to_json(ws.P)},
                        {"theta1", matrix_to_json(ws.theta1)}, {"theta2", matrix_to_json(ws.theta2)},
                        {"es", vector_to_json(ws.es)},   {"ec", vector_to_json(ws.ec)},
                        {"a", vector_to_json(ws.a)},     {"b", ws.b},
                        {"D", matrix_to_json(ws.D)}};
}

}  // namespace aptraj
