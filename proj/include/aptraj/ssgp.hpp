#pragma once

// Sparse-spectrum Gaussian-process regression of state transitions.
//
// Each output dimension d owns an independent random Fourier feature map
// phi_d(x) = sigma_f / sqrt(r) [cos(W x); sin(W x)] with W = epsilon / l
// (row-wise), and a Bayesian linear model on top of it with prior w ~ N(0, I).
// After offline training the information matrix A and the accumulator b are
// stored divided by the number of training points M; predictive variances
// undo that scale so that predictions do not depend on it.

#include <cstdint>
#include <vector>

#include "aptraj/linalg.hpp"

namespace aptraj {

struct Hyperparameters {
  /// Weight prior variance; the prior covariance is this times identity.
  static constexpr double kWeightPriorVariance = 1.0;

  double sigma_f = 1.0;
  double sigma_n = 0.1;
  VectorXd lengthscales;

  /// Throws std::invalid_argument unless every field is strictly positive and finite.
  void validate() const;
};

struct FeatureMap {
  MatrixXd epsilon;      // r x input_dim standard-normal draws
  VectorXd lengthscales; // input_dim
  std::uint64_t seed = 0;
  Index r = 0;

  Index input_dim() const { return epsilon.cols(); }
  /// Spectral frequencies, row i = epsilon.row(i) ./ lengthscales.
  MatrixXd frequencies() const;
  FeatureMap with_lengthscales(const VectorXd& l) const;
};

struct Dataset {
  MatrixXd inputs;   // N x (n + m)
  MatrixXd targets;  // N x n

  Index size() const { return inputs.rows(); }
  void validate() const;
};

FeatureMap sample_feature_map(const Hyperparameters& hyper, Index r, Index input_dim,
                              std::uint64_t seed);

/// Feature vector of length 2r: cosine block followed by sine block.
VectorXd features(const FeatureMap& map, double sigma_f, const VectorXd& x);

/// Transposed feature Jacobian, input_dim x 2r; column i is d phi_i / d x.
MatrixXd feature_jacobian(const FeatureMap& map, double sigma_f, const VectorXd& x);

/// Features of every row of `inputs`, stacked as the columns of a 2r x N matrix.
MatrixXd feature_matrix(const MatrixXd& frequencies, double sigma_f, const MatrixXd& inputs);

struct OutputModel {
  FeatureMap map;
  Hyperparameters hyper;
  MatrixXd chol_a;  // upper triangular, A = R^T R (normalized)
  VectorXd b;       // normalized Phi * y
  VectorXd w;
  double target_mean = 0.0;   // subtracted from targets before fitting
  double target_scale = 1.0;  // offline target std, used for initialization only
};

struct SSGPModel {
  std::vector<OutputModel> outputs;
  Index input_dim = 0;
  /// Number of offline training points; A and b carry a 1/M normalization.
  double num_offline = 0.0;

  Index output_dim() const { return static_cast<Index>(outputs.size()); }
  bool trained() const { return !outputs.empty() && num_offline > 0.0; }
};

struct PointPrediction {
  VectorXd mean;
  VectorXd variance;
};

/// Fits one Bayesian linear model per output dimension.
SSGPModel train_batch(const Dataset& data, const std::vector<Hyperparameters>& hypers, Index r,
                      const std::vector<std::uint64_t>& seeds);

PointPrediction predict_point(const SSGPModel& model, const VectorXd& x);

struct AdaptOptions {
  double lambda = 0.992;
  /// Re-adds the decayed share of the sigma_n^2 prior term after each update.
  bool readd_prior = false;
};

/// Forgetting-factor update with one observed transition (x, dx).
void adapt(SSGPModel& model, const VectorXd& x, const VectorXd& dx, const AdaptOptions& opts);

/// Normalized information matrix A = R^T R of one output.
MatrixXd information_matrix(const OutputModel& out);

/// Default per-output seed derived from a base seed.
inline std::uint64_t output_seed(std::uint64_t base, Index d) {
  return base + 7919u * static_cast<std::uint64_t>(d);
}

// Hyperparameter learning.

struct LikelihoodValue {
  double value = 0.0;
  /// Gradient with respect to (log sigma_f, log sigma_n, log l_1, ..., log l_D).
  VectorXd gradient;
};

/// Log evidence of the centered targets of output `output_dim` under the
/// feature-space Bayesian linear model. `map.epsilon` is held fixed; the
/// frequencies use `hyper.lengthscales`.
LikelihoodValue log_marginal_likelihood(const Dataset& data, const Hyperparameters& hyper,
                                        const FeatureMap& map, Index output_dim);

struct HyperOptOptions {
  int max_iters = 200;
  double rel_tol = 1e-6;
};

struct HyperOptTrace {
  Hyperparameters hyper;
  std::vector<double> likelihoods;  // one entry per accepted iterate, starting with the initial point
};

/// Scale-free initial guess from the data marginals.
Hyperparameters initial_hyperparameters(const Dataset& data, Index output_dim);

HyperOptTrace optimize_output_hyperparameters(const Dataset& data, Index output_dim,
                                              const FeatureMap& map, const Hyperparameters& init,
                                              const HyperOptOptions& opts);

/// Runs optimize_output_hyperparameters for every output with feature seeds
/// output_seed(seed, d).
std::vector<Hyperparameters> optimize_hyperparameters(const Dataset& data, Index r,
                                                      std::uint64_t seed, int max_iters);

}  // namespace aptraj
