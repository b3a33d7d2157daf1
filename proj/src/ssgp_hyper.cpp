#include <cmath>
#include <deque>
#include <numbers>
#include <stdexcept>

#include "aptraj/ssgp.hpp"

namespace aptraj {

namespace {

constexpr double kScaleFloor = 1e-12;

double scale_or_one(double s) { return s > kScaleFloor ? s : 1.0; }

VectorXd pack(const Hyperparameters& h) {
  VectorXd theta(2 + h.lengthscales.size());
  theta(0) = std::log(h.sigma_f);
  theta(1) = std::log(h.sigma_n);
  theta.tail(h.lengthscales.size()) = h.lengthscales.array().log();
  return theta;
}

Hyperparameters unpack(const VectorXd& theta) {
  Hyperparameters h;
  h.sigma_f = std::exp(theta(0));
  h.sigma_n = std::exp(theta(1));
  h.lengthscales = theta.tail(theta.size() - 2).array().exp();
  return h;
}

}  // namespace

LikelihoodValue log_marginal_likelihood(const Dataset& data, const Hyperparameters& hyper,
                                        const FeatureMap& map, Index output_dim) {
  hyper.validate();
  data.validate();
  const Index n_points = data.size();
  if (n_points < 1) throw std::invalid_argument("log_marginal_likelihood: empty dataset");
  if (output_dim < 0 || output_dim >= data.targets.cols())
    throw std::invalid_argument("log_marginal_likelihood: output index out of range");
  if (hyper.lengthscales.size() != map.input_dim() || data.inputs.cols() != map.input_dim())
    throw std::invalid_argument("log_marginal_likelihood: dimension mismatch");

  const Index r = map.r;
  const Index nf = 2 * r;
  const double s = hyper.sigma_n * hyper.sigma_n;
  const double big_n = static_cast<double>(n_points);

  const VectorXd t = data.targets.col(output_dim);
  const VectorXd y = t.array() - t.mean();
  const MatrixXd omega = map.with_lengthscales(hyper.lengthscales).frequencies();
  const MatrixXd phi = feature_matrix(omega, hyper.sigma_f, data.inputs);  // 2r x N

  MatrixXd a = phi * phi.transpose();
  a.diagonal().array() += s / Hyperparameters::kWeightPriorVariance;
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("log_marginal_likelihood: information matrix is not positive definite");
  const VectorXd b = phi * y;
  const VectorXd w = llt.solve(b);
  const MatrixXd l = llt.matrixL();
  const double logdet_a = 2.0 * l.diagonal().array().log().sum();
  const MatrixXd a_inv = llt.solve(MatrixXd::Identity(nf, nf));
  const double tr_a_inv = a_inv.trace();

  LikelihoodValue out;
  out.value = -0.5 * (y.squaredNorm() - b.dot(w)) / s - 0.5 * logdet_a -
              0.5 * (big_n - static_cast<double>(nf)) * std::log(s) -
              0.5 * big_n * std::log(2.0 * std::numbers::pi);

  const Index dim = map.input_dim();
  out.gradient.resize(2 + dim);
  out.gradient(0) = w.squaredNorm() - (static_cast<double>(nf) - s * tr_a_inv);
  const VectorXd alpha = (y - phi.transpose() * w) / s;
  out.gradient(1) = s * alpha.squaredNorm() - (big_n - static_cast<double>(nf)) - s * tr_a_inv;

  // d phi / d log l_k for feature i and point p:
  //   cos rows:  sin-feature(i, p) * omega(i, k) * x(p, k)
  //   sin rows: -cos-feature(i, p) * omega(i, k) * x(p, k)
  // contracted against Z = alpha w^T - Phi^T A^{-1}.
  const MatrixXd z = alpha * w.transpose() - phi.transpose() * a_inv;  // N x 2r
  MatrixXd h(n_points, r);
  for (Index i = 0; i < r; ++i)
    h.col(i) = phi.row(r + i).transpose().cwiseProduct(z.col(i)) -
               phi.row(i).transpose().cwiseProduct(z.col(r + i));
  const MatrixXd xh = data.inputs.transpose() * h;  // D x r
  out.gradient.tail(dim) = xh.cwiseProduct(omega.transpose()).rowwise().sum();
  return out;
}

Hyperparameters initial_hyperparameters(const Dataset& data, Index output_dim) {
  const VectorXd t = data.targets.col(output_dim);
  const double s = t.size() ? std::sqrt((t.array() - t.mean()).square().mean()) : 0.0;
  Hyperparameters h;
  h.sigma_f = scale_or_one(s);
  h.sigma_n = 0.1 * scale_or_one(s);
  h.lengthscales.resize(data.inputs.cols());
  for (Index k = 0; k < data.inputs.cols(); ++k) {
    const VectorXd c = data.inputs.col(k);
    const double sd = c.size() ? std::sqrt((c.array() - c.mean()).square().mean()) : 0.0;
    h.lengthscales(k) = scale_or_one(sd);
  }
  return h;
}

HyperOptTrace optimize_output_hyperparameters(const Dataset& data, Index output_dim,
                                              const FeatureMap& map, const Hyperparameters& init,
                                              const HyperOptOptions& opts) {
  init.validate();
  // Box in log space around the initial scales keeps the search away from degenerate limits.
  const Hyperparameters ref = initial_hyperparameters(data, output_dim);
  VectorXd lo(2 + ref.lengthscales.size()), hi(lo.size());
  lo(0) = std::log(1e-4 * ref.sigma_f);
  hi(0) = std::log(1e3 * ref.sigma_f);
  lo(1) = std::log(1e-4 * ref.sigma_f);
  hi(1) = std::log(10.0 * ref.sigma_f);
  lo.tail(ref.lengthscales.size()) = (1e-3 * ref.lengthscales).array().log();
  hi.tail(ref.lengthscales.size()) = (1e3 * ref.lengthscales).array().log();

  auto eval = [&](const VectorXd& theta) {
    return log_marginal_likelihood(data, unpack(theta), map, output_dim);
  };

  VectorXd theta = pack(init).cwiseMax(lo).cwiseMin(hi);
  LikelihoodValue cur = eval(theta);
  HyperOptTrace trace;
  trace.likelihoods.push_back(cur.value);

  // Limited-memory quasi-Newton ascent with projected backtracking; only
  // strictly improving points are accepted.
  constexpr std::size_t kMemory = 6;
  constexpr double kMaxLogStep = 1.0;
  std::deque<std::pair<VectorXd, VectorXd>> history;  // (s, y) pairs for the minimization of -L

  for (int it = 0; it < opts.max_iters; ++it) {
    VectorXd q = -cur.gradient;
    std::vector<double> alphas;
    for (auto it_h = history.rbegin(); it_h != history.rend(); ++it_h) {
      const double rho = 1.0 / it_h->second.dot(it_h->first);
      const double a = rho * it_h->first.dot(q);
      alphas.push_back(a);
      q -= a * it_h->second;
    }
    if (!history.empty()) {
      const auto& [s_last, y_last] = history.back();
      q *= s_last.dot(y_last) / y_last.squaredNorm();
    }
    std::size_t k = alphas.size();
    for (const auto& [s_h, y_h] : history) {
      --k;
      const double rho = 1.0 / y_h.dot(s_h);
      const double beta = rho * y_h.dot(q);
      q += s_h * (alphas[k] - beta);
    }
    VectorXd dir = -q;
    if (!(dir.dot(cur.gradient) > 0.0) || !dir.allFinite()) {
      dir = cur.gradient;
      history.clear();
    }
    const double max_abs = dir.cwiseAbs().maxCoeff();
    if (!(max_abs > 0.0)) break;
    double step = std::min(1.0, kMaxLogStep / max_abs);

    bool accepted = false;
    VectorXd next_theta;
    LikelihoodValue next;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      next_theta = (theta + step * dir).cwiseMax(lo).cwiseMin(hi);
      if ((next_theta - theta).cwiseAbs().maxCoeff() < 1e-14) break;
      try {
        next = eval(next_theta);
      } catch (const std::runtime_error&) {
        continue;
      }
      if (std::isfinite(next.value) && next.value > cur.value) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    const double gain = next.value - cur.value;
    VectorXd s_vec = next_theta - theta;
    VectorXd y_vec = -(next.gradient - cur.gradient);
    if (s_vec.dot(y_vec) > 1e-12 * s_vec.norm() * y_vec.norm()) {
      history.emplace_back(s_vec, y_vec);
      if (history.size() > kMemory) history.pop_front();
    }
    theta = next_theta;
    cur = next;
    trace.likelihoods.push_back(cur.value);
    if (gain < opts.rel_tol * std::max(1.0, std::abs(cur.value))) break;
  }
  trace.hyper = unpack(theta);
  return trace;
}

std::vector<Hyperparameters> optimize_hyperparameters(const Dataset& data, Index r,
                                                      std::uint64_t seed, int max_iters) {
  data.validate();
  if (data.size() < 1) throw std::invalid_argument("optimize_hyperparameters: empty dataset");
  HyperOptOptions opts;
  opts.max_iters = max_iters;
  std::vector<Hyperparameters> result;
  for (Index d = 0; d < data.targets.cols(); ++d) {
    const Hyperparameters init = initial_hyperparameters(data, d);
    const FeatureMap map = sample_feature_map(init, r, data.inputs.cols(), output_seed(seed, d));
    result.push_back(optimize_output_hyperparameters(data, d, map, init, opts).hyper);
  }
  return result;
}

}  // namespace aptraj
