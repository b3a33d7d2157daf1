#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "aptraj/inference.hpp"
#include "aptraj/ssgp.hpp"

namespace aptraj::testing {

inline Dataset random_dataset(Index n_points, Index n, Index m, std::uint64_t seed, double noise = 0.01) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 6.28);
  const Index dim = n + m;
  VectorXd a(n), b(n);
  MatrixXd dir(n, dim);
  for (Index o = 0; o < n; ++o) {
    a(o) = phase(rng);
    b(o) = 0.5 + std::abs(normal(rng));
    for (Index k = 0; k < dim; ++k) dir(o, k) = normal(rng);
  }
  Dataset d;
  d.inputs.resize(n_points, dim);
  d.targets.resize(n_points, n);
  for (Index i = 0; i < n_points; ++i) {
    for (Index k = 0; k < dim; ++k) d.inputs(i, k) = normal(rng);
    for (Index o = 0; o < n; ++o)
      d.targets(i, o) = 0.3 * std::sin(dir.row(o).dot(d.inputs.row(i)) + a(o)) * b(o) + 0.1 * o +
                        noise * normal(rng);
  }
  return d;
}

struct RandomModelOptions {
  Index n = 2;
  Index m = 1;
  Index r = 10;
  Index n_points = 200;
  double sigma_f = 0.5;
  double sigma_n = 0.05;
  double lengthscale = 1.2;
};

inline SSGPModel random_model(std::uint64_t seed, const RandomModelOptions& o = {}) {
  const Dataset d = random_dataset(o.n_points, o.n, o.m, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> jitter(0.7, 1.4);
  std::vector<Hyperparameters> hypers(o.n);
  std::vector<std::uint64_t> seeds(o.n);
  for (Index k = 0; k < o.n; ++k) {
    hypers[k].sigma_f = o.sigma_f * jitter(rng);
    hypers[k].sigma_n = o.sigma_n * jitter(rng);
    hypers[k].lengthscales.resize(o.n + o.m);
    for (Index j = 0; j < o.n + o.m; ++j) hypers[k].lengthscales(j) = o.lengthscale * jitter(rng);
    seeds[k] = output_seed(seed, k);
  }
  return train_batch(d, hypers, o.r, seeds);
}

inline MatrixXd random_psd(Index dim, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd a(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) a(i, j) = normal(rng);
  return scale * (a * a.transpose()) / static_cast<double>(dim);
}

inline VectorXd random_vector(Index dim, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = scale * normal(rng);
  return v;
}

/// Finite-difference comparison rule: |analytic - fd| <= rel |fd| + abs.
inline bool fd_close(double analytic, double fd, double rel = 1e-4, double abs = 1e-6) {
  return std::abs(analytic - fd) <= rel * std::abs(fd) + abs;
}

/// Flattens every field of OutputMoments into one vector (mu_f, sigma_f, sigma_xf column-major).
inline VectorXd flatten(const OutputMoments& m) {
  VectorXd v(m.mu_f.size() + m.sigma_f.size() + m.sigma_xf.size());
  v << m.mu_f, Eigen::Map<const VectorXd>(m.sigma_f.data(), m.sigma_f.size()),
      Eigen::Map<const VectorXd>(m.sigma_xf.data(), m.sigma_xf.size());
  return v;
}

}  // namespace aptraj::testing
