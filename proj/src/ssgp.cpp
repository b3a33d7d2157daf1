#include "aptraj/ssgp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace aptraj {

void Hyperparameters::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(sigma_f)) throw std::invalid_argument("Hyperparameters: sigma_f must be positive and finite");
  if (!ok(sigma_n)) throw std::invalid_argument("Hyperparameters: sigma_n must be positive and finite");
  if (lengthscales.size() == 0) throw std::invalid_argument("Hyperparameters: no lengthscales");
  for (Index i = 0; i < lengthscales.size(); ++i)
    if (!ok(lengthscales(i)))
      throw std::invalid_argument("Hyperparameters: lengthscale " + std::to_string(i) +
                                  " must be positive and finite");
}

MatrixXd FeatureMap::frequencies() const {
  return epsilon.array().rowwise() / lengthscales.transpose().array();
}

FeatureMap FeatureMap::with_lengthscales(const VectorXd& l) const {
  if (l.size() != input_dim()) throw std::invalid_argument("FeatureMap: lengthscale size mismatch");
  FeatureMap out = *this;
  out.lengthscales = l;
  return out;
}

void Dataset::validate() const {
  if (inputs.rows() != targets.rows())
    throw std::invalid_argument("Dataset: inputs and targets have different row counts");
  if (!inputs.allFinite() || !targets.allFinite())
    throw std::invalid_argument("Dataset: non-finite entries");
}

FeatureMap sample_feature_map(const Hyperparameters& hyper, Index r, Index input_dim,
                              std::uint64_t seed) {
  if (r < 1) throw std::invalid_argument("sample_feature_map: r must be >= 1");
  if (input_dim < 1) throw std::invalid_argument("sample_feature_map: input_dim must be >= 1");
  if (hyper.lengthscales.size() != input_dim)
    throw std::invalid_argument("sample_feature_map: lengthscale count does not match input_dim");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureMap map;
  map.epsilon.resize(r, input_dim);
  for (Index i = 0; i < r; ++i)
    for (Index d = 0; d < input_dim; ++d) map.epsilon(i, d) = normal(rng);
  map.lengthscales = hyper.lengthscales;
  map.seed = seed;
  map.r = r;
  return map;
}

VectorXd features(const FeatureMap& map, double sigma_f, const VectorXd& x) {
  if (x.size() != map.input_dim()) throw std::invalid_argument("features: input dimension mismatch");
  const Index r = map.r;
  const double amp = sigma_f / std::sqrt(static_cast<double>(r));
  VectorXd angles = map.frequencies() * x;
  VectorXd phi(2 * r);
  phi.head(r) = amp * angles.array().cos();
  phi.tail(r) = amp * angles.array().sin();
  return phi;
}

MatrixXd feature_jacobian(const FeatureMap& map, double sigma_f, const VectorXd& x) {
  if (x.size() != map.input_dim())
    throw std::invalid_argument("feature_jacobian: input dimension mismatch");
  const Index r = map.r;
  const double amp = sigma_f / std::sqrt(static_cast<double>(r));
  const MatrixXd omega = map.frequencies();
  VectorXd angles = omega * x;
  MatrixXd jac(map.input_dim(), 2 * r);
  for (Index i = 0; i < r; ++i) {
    jac.col(i) = -amp * std::sin(angles(i)) * omega.row(i).transpose();
    jac.col(r + i) = amp * std::cos(angles(i)) * omega.row(i).transpose();
  }
  return jac;
}

MatrixXd feature_matrix(const MatrixXd& frequencies, double sigma_f, const MatrixXd& inputs) {
  const Index r = frequencies.rows();
  const double amp = sigma_f / std::sqrt(static_cast<double>(r));
  MatrixXd angles = frequencies * inputs.transpose();  // r x N
  MatrixXd phi(2 * r, inputs.rows());
  phi.topRows(r) = amp * angles.array().cos();
  phi.bottomRows(r) = amp * angles.array().sin();
  return phi;
}

namespace {

double mean_of(const VectorXd& v) { return v.size() ? v.mean() : 0.0; }

double std_of(const VectorXd& v) {
  if (v.size() == 0) return 0.0;
  const double mu = v.mean();
  return std::sqrt((v.array() - mu).square().mean());
}

void solve_weights(OutputModel& out) { out.w = cholesky_solve_upper(out.chol_a, out.b); }

}  // namespace

SSGPModel train_batch(const Dataset& data, const std::vector<Hyperparameters>& hypers, Index r,
                      const std::vector<std::uint64_t>& seeds) {
  data.validate();
  const Index n_points = data.size();
  if (n_points < 1) throw std::invalid_argument("train_batch: empty dataset");
  const Index n_out = data.targets.cols();
  const Index dim = data.inputs.cols();
  if (static_cast<Index>(hypers.size()) != n_out || static_cast<Index>(seeds.size()) != n_out)
    throw std::invalid_argument("train_batch: need one hyperparameter set and seed per output");

  SSGPModel model;
  model.input_dim = dim;
  model.num_offline = static_cast<double>(n_points);
  const double inv_m = 1.0 / model.num_offline;
  for (Index d = 0; d < n_out; ++d) {
    const Hyperparameters& hp = hypers[d];
    hp.validate();
    OutputModel out;
    out.hyper = hp;
    out.map = sample_feature_map(hp, r, dim, seeds[d]);
    const VectorXd t = data.targets.col(d);
    out.target_mean = mean_of(t);
    out.target_scale = std_of(t);
    const VectorXd y = t.array() - out.target_mean;

    const MatrixXd phi = feature_matrix(out.map.frequencies(), hp.sigma_f, data.inputs);
    MatrixXd a = phi * phi.transpose();
    a.diagonal().array() += hp.sigma_n * hp.sigma_n / Hyperparameters::kWeightPriorVariance;
    a *= inv_m;
    out.b = inv_m * (phi * y);
    Eigen::LLT<MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("train_batch: information matrix is not positive definite");
    out.chol_a = llt.matrixU();
    solve_weights(out);
    model.outputs.push_back(std::move(out));
  }
  return model;
}

PointPrediction predict_point(const SSGPModel& model, const VectorXd& x) {
  if (!model.trained()) throw std::logic_error("predict_point: model is not trained");
  if (x.size() != model.input_dim) throw std::invalid_argument("predict_point: input dimension mismatch");
  const Index n = model.output_dim();
  PointPrediction p{VectorXd(n), VectorXd(n)};
  for (Index d = 0; d < n; ++d) {
    const OutputModel& out = model.outputs[d];
    const VectorXd phi = features(out.map, out.hyper.sigma_f, x);
    p.mean(d) = out.target_mean + out.w.dot(phi);
    const VectorXd v = out.chol_a.transpose().triangularView<Eigen::Lower>().solve(phi);
    const double s2 = out.hyper.sigma_n * out.hyper.sigma_n;
    p.variance(d) = s2 * (1.0 + v.squaredNorm() / model.num_offline);
  }
  return p;
}

void adapt(SSGPModel& model, const VectorXd& x, const VectorXd& dx, const AdaptOptions& opts) {
  const double lambda = opts.lambda;
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("adapt: lambda must lie in (0, 1)");
  if (!model.trained()) throw std::logic_error("adapt: model is not trained");
  if (x.size() != model.input_dim || dx.size() != model.output_dim())
    throw std::invalid_argument("adapt: dimension mismatch");
  if (!x.allFinite() || !dx.allFinite()) throw std::invalid_argument("adapt: non-finite sample");

  const double keep = std::sqrt(lambda);
  const double gain = std::sqrt(1.0 - lambda);
  for (Index d = 0; d < model.output_dim(); ++d) {
    OutputModel& out = model.outputs[d];
    const VectorXd phi = features(out.map, out.hyper.sigma_f, x);
    out.chol_a *= keep;
    cholesky_rank1_update(out.chol_a, gain * phi);
    out.b = lambda * out.b + (1.0 - lambda) * (dx(d) - out.target_mean) * phi;
    if (opts.readd_prior) {
      MatrixXd a = information_matrix(out);
      const double s2 = out.hyper.sigma_n * out.hyper.sigma_n;
      a.diagonal().array() += (1.0 - lambda) * s2 / (Hyperparameters::kWeightPriorVariance * model.num_offline);
      Eigen::LLT<MatrixXd> llt(a);
      if (llt.info() != Eigen::Success) throw std::runtime_error("adapt: refactorization failed");
      out.chol_a = llt.matrixU();
    }
    solve_weights(out);
  }
}

MatrixXd information_matrix(const OutputModel& out) {
  MatrixXd r = out.chol_a.triangularView<Eigen::Upper>();
  return r.transpose() * r;
}

}  // namespace aptraj
