#pragma once

// Reference solutions for the trajectory-optimization tests: a tracking
// Riccati recursion for affine belief dynamics with the expected quadratic
// cost, and an exhaustive active-set enumeration for small box QPs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include "aptraj/belief_dynamics.hpp"
#include "aptraj/cost.hpp"
#include "test_helpers.hpp"

namespace aptraj::testing {

struct LqrInstance {
  std::shared_ptr<AffineBeliefDynamics> dyn;
  Belief x0;
  CostSpec spec;
  Index horizon = 0;
};

inline LqrInstance make_lqr_instance(Index horizon, std::uint64_t seed, Index m = 1) {
  const Index n = 2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  MatrixXd a(n, n), b(n, m);
  a << 1.0 + 0.05 * uni(rng), 0.1, 0.1 * uni(rng), 1.0 + 0.05 * uni(rng);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) b(i, j) = 0.1 * uni(rng) + (i == 1 && j == 0 ? 0.1 : 0.0);
  const VectorXd c = 0.02 * random_vector(n, 1.0, seed + 1);
  const MatrixXd w = 1e-3 * MatrixXd::Identity(n, n) + random_psd(n, 1e-3, seed + 2);
  LqrInstance inst;
  inst.dyn = std::make_shared<AffineBeliefDynamics>(a, b, c, w);
  inst.x0 = Belief{random_vector(n, 1.0, seed + 3), random_psd(n, 0.05, seed + 4)};
  inst.spec.Q = (MatrixXd(n, n) << 1.0, 0.1, 0.1, 0.5).finished();
  inst.spec.R = 0.1 * MatrixXd::Identity(m, m);
  inst.spec.Qf = 10.0 * inst.spec.Q;
  inst.spec.goal = [](Index k) { return (VectorXd(2) << std::sin(0.2 * k), 0.5).finished(); };
  inst.horizon = horizon;
  return inst;
}

struct RiccatiSolution {
  std::vector<MatrixXd> K;      // u_k = K_k mu_k + kappa_k
  std::vector<VectorXd> kappa;
  double cost = 0.0;            // optimal expected cost from x0
};

inline RiccatiSolution riccati(const LqrInstance& inst) {
  const MatrixXd& A = inst.dyn->A();
  const MatrixXd& B = inst.dyn->B();
  const VectorXd& c = inst.dyn->c();
  const CostSpec& s = inst.spec;
  const Index h = inst.horizon;
  RiccatiSolution sol;
  sol.K.resize(h - 1);
  sol.kappa.resize(h - 1);
  // Value of the mean part: mu^T P mu + 2 p^T mu + r0.
  VectorXd g = s.goal(h - 1);
  MatrixXd P = s.Qf;
  VectorXd p = -s.Qf * g;
  double r0 = g.dot(s.Qf * g);
  for (Index k = h - 2; k >= 0; --k) {
    g = s.goal(k);
    const MatrixXd G = s.R + B.transpose() * P * B;
    const MatrixXd K = -G.ldlt().solve(B.transpose() * P * A);
    const VectorXd kappa = -G.ldlt().solve(B.transpose() * (P * c + p));
    const MatrixXd acl = A + B * K;
    const VectorXd ccl = B * kappa + c;
    const MatrixXd P_new = s.Q + K.transpose() * s.R * K + acl.transpose() * P * acl;
    const VectorXd p_new = -s.Q * g + K.transpose() * s.R * kappa + acl.transpose() * (P * ccl + p);
    r0 = g.dot(s.Q * g) + kappa.dot(s.R * kappa) + ccl.dot(P * ccl) + 2.0 * p.dot(ccl) + r0;
    P = 0.5 * (P_new + P_new.transpose());
    p = p_new;
    sol.K[k] = K;
    sol.kappa[k] = kappa;
  }
  const VectorXd& mu0 = inst.x0.mu;
  double cost = mu0.dot(P * mu0) + 2.0 * p.dot(mu0) + r0;
  MatrixXd sigma = inst.x0.sigma;
  for (Index k = 0; k + 1 < h; ++k) {
    cost += (sigma * s.Q).trace();
    sigma = A * sigma * A.transpose() + inst.dyn->W();
  }
  sol.cost = cost + (sigma * s.Qf).trace();
  return sol;
}

struct BoxQpInstance {
  MatrixXd H;
  VectorXd g, lo, hi, x0;
};

inline BoxQpInstance random_box_qp(Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.05, 2.0);
  BoxQpInstance inst;
  inst.H = random_psd(m, 2.0, seed + 1) + 0.1 * MatrixXd::Identity(m, m);
  inst.g = random_vector(m, 3.0, seed + 2);
  inst.lo.resize(m);
  inst.hi.resize(m);
  for (Index i = 0; i < m; ++i) {
    inst.lo(i) = -uni(rng);
    inst.hi(i) = uni(rng);
  }
  inst.x0 = random_vector(m, 1.0, seed + 3);
  return inst;
}

/// Tries every (lower, upper, free) assignment and keeps the best feasible stationary point.
inline VectorXd enumerate_box_qp(const MatrixXd& H, const VectorXd& g, const VectorXd& lo, const VectorXd& hi) {
  const Index m = g.size();
  Index combos = 1;
  for (Index i = 0; i < m; ++i) combos *= 3;
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_x;
  for (Index c = 0; c < combos; ++c) {
    VectorXd x = VectorXd::Zero(m);
    std::vector<Index> free;
    Index code = c;
    for (Index i = 0; i < m; ++i, code /= 3) {
      if (code % 3 == 0) x(i) = lo(i);
      else if (code % 3 == 1) x(i) = hi(i);
      else free.push_back(i);
    }
    if (!free.empty()) {
      const Index k = static_cast<Index>(free.size());
      MatrixXd hf(k, k);
      VectorXd rhs(k);
      for (Index a = 0; a < k; ++a) {
        rhs(a) = -g(free[a]);
        for (Index j = 0; j < m; ++j) {
          const bool j_free = std::find(free.begin(), free.end(), j) != free.end();
          if (!j_free) rhs(a) -= H(free[a], j) * x(j);
        }
        for (Index b = 0; b < k; ++b) hf(a, b) = H(free[a], free[b]);
      }
      const VectorXd xf = hf.ldlt().solve(rhs);
      bool feasible = true;
      for (Index a = 0; a < k; ++a) {
        if (xf(a) < lo(free[a]) - 1e-12 || xf(a) > hi(free[a]) + 1e-12) feasible = false;
        x(free[a]) = xf(a);
      }
      if (!feasible) continue;
    }
    const double f = 0.5 * x.dot(H * x) + g.dot(x);
    if (f < best) {
      best = f;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace aptraj::testing
