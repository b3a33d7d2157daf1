#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "aptraj/inference.hpp"
#include "aptraj/ssgp_io.hpp"
#include "fd_checks.hpp"
#include "test_helpers.hpp"

using namespace aptraj;
using namespace aptraj::testing;

namespace {

JointInput joint_of(const VectorXd& mu, const MatrixXd& sigma) { return {mu, sigma}; }

/// Largest |emm - mc| / se over the three moments.
double worst_z(const OutputMoments& e, const MonteCarloMoments& mc) {
  const VectorXd a = flatten(e), b = flatten(mc.moments), se = flatten(mc.standard_errors);
  double z = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double diff = std::abs(a(i) - b(i));
    if (se(i) > 0.0) z = std::max(z, diff / se(i));
    else if (diff > 1e-12) z = std::max(z, 1e9);
  }
  return z;
}

double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST(Inference, MethodNames) {
  EXPECT_STREQ(to_string(InferenceMethod::kExactMoments), "emm");
  EXPECT_EQ(inference_method_from_string("lin"), InferenceMethod::kLinearized);
  EXPECT_THROW(inference_method_from_string("ukf"), std::invalid_argument);
}

TEST(Inference, DegenerateInputMatchesPointPrediction) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SSGPModel model = random_model(1000 + s, {.n = 2, .m = 1, .r = 12});
    const Predictor pred = make_predictor(model);
    const VectorXd x = random_vector(3, 1.0, s);
    const JointInput j = joint_of(x, MatrixXd::Zero(3, 3));
    const PointPrediction p = predict_point(model, x);
    const PointPrediction pp = predict_point(pred, x);
    const OutputMoments e = emm_moments(pred, j);
    const OutputMoments l = lin_moments(pred, j);
    for (Index k = 0; k < 2; ++k) {
      EXPECT_NEAR(e.mu_f(k), p.mean(k), 1e-12);
      EXPECT_NEAR(l.mu_f(k), p.mean(k), 1e-12);
      EXPECT_NEAR(pp.mean(k), p.mean(k), 1e-12);
      EXPECT_NEAR(e.sigma_f(k, k), p.variance(k), 1e-12);
      EXPECT_NEAR(l.sigma_f(k, k), p.variance(k), 1e-12);
    }
    EXPECT_NEAR(e.sigma_f(0, 1), 0.0, 1e-12);
    EXPECT_TRUE(e.sigma_xf.isZero(0.0));
    EXPECT_TRUE(l.sigma_xf.isZero(0.0));
  }
}

TEST(Inference, ExactMomentsMatchMonteCarlo) {
  const std::vector<double> scales{0.01, 0.1};
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Predictor pred = make_predictor(random_model(2000 + s, {.n = 2, .m = 1, .r = 10}));
    for (double sc : scales) {
      const JointInput j = joint_of(random_vector(3, 0.8, s), sc * MatrixXd::Identity(3, 3));
      EXPECT_LT(worst_z(emm_moments(pred, j), mc_moments(pred, j, 400000, 17 + s)), 4.5) << s << " " << sc;
    }
    const JointInput j = joint_of(random_vector(3, 0.8, s), random_psd(3, 0.2, s));
    EXPECT_LT(worst_z(emm_moments(pred, j), mc_moments(pred, j, 400000, 31 + s)), 4.5);
  }
}

TEST(Inference, TrigIntegralsMatchQuadrature) {
  const SSGPModel model = random_model(77, {.n = 1, .m = 0, .r = 8});
  const Predictor pred = make_predictor(model);
  const double mu = 0.37, var = 0.6;
  const JointInput j = joint_of(VectorXd::Constant(1, mu), MatrixXd::Constant(1, 1, var));
  const InferenceWorkspace ws = inference_workspace(pred, j, 0);
  const double sd = std::sqrt(var);
  for (Index i = 0; i < pred.outputs[0].r(); ++i) {
    const double w = pred.outputs[0].omega(i, 0);
    auto gauss = [&](double x) { return std::exp(-0.5 * (x - mu) * (x - mu) / var) / (sd * std::sqrt(2 * std::numbers::pi)); };
    const double c = simpson([&](double x) { return std::cos(w * x) * gauss(x); }, mu - 14 * sd, mu + 14 * sd, 40000);
    const double s = simpson([&](double x) { return std::sin(w * x) * gauss(x); }, mu - 14 * sd, mu + 14 * sd, 40000);
    EXPECT_NEAR(ws.ec(i), c, 1e-8);
    EXPECT_NEAR(ws.es(i), s, 1e-8);
  }
}

TEST(Inference, WorkspaceReducesAtPointInput) {
  const SSGPModel model = random_model(78, {.n = 2, .m = 1, .r = 6});
  const Predictor pred = make_predictor(model);
  const VectorXd x = random_vector(3, 1.0, 4);
  const InferenceWorkspace ws = inference_workspace(pred, joint_of(x, MatrixXd::Zero(3, 3)), 1);
  const OutputModel& o = model.outputs[1];
  const VectorXd phi = features(o.map, o.hyper.sigma_f, x);
  EXPECT_LT((ws.q - phi).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((ws.T - phi * phi.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((ws.P - x * phi.transpose()).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((ws.D - feature_jacobian(o.map, o.hyper.sigma_f, x)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(ws.theta1.rows(), 36);
  EXPECT_EQ(ws.t_cross.size(), 2u);
  EXPECT_NEAR(ws.b + ws.a.dot(x), predict_point(model, x).mean(1), 1e-12);
  const nlohmann::json js = workspace_to_json(ws);
  for (const char* key : {"q", "S", "T", "Tij", "P", "theta1", "theta2", "es", "ec", "a", "b", "D"})
    EXPECT_TRUE(js.contains(key)) << key;
  EXPECT_EQ(matrix_from_json(js["T"]), ws.T);
}

TEST(Inference, LinearizationApproachesExactMomentsForSmallCovariance) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Predictor pred = make_predictor(random_model(3000 + s, {.n = 2, .m = 1, .r = 10}));
    const JointInput j = joint_of(random_vector(3, 0.8, s), 1e-6 * MatrixXd::Identity(3, 3));
    const OutputMoments e = emm_moments(pred, j), l = lin_moments(pred, j);
    for (Index k = 0; k < 2; ++k) {
      EXPECT_LE(std::abs(e.mu_f(k) - l.mu_f(k)), 1e-4 * std::max(std::abs(e.mu_f(k)), 1e-3));
      EXPECT_LE(std::abs(e.sigma_f(k, k) - l.sigma_f(k, k)), 1e-3 * e.sigma_f(k, k));
    }
  }
}

TEST(Inference, LinearizationGapShrinksLinearlyInCovariance) {
  const Predictor pred = make_predictor(random_model(3100, {.n = 2, .m = 1, .r = 10}));
  const VectorXd mu = random_vector(3, 0.8, 5);
  std::vector<double> gaps;
  for (int k = 1; k <= 5; ++k) {
    const JointInput j = joint_of(mu, std::pow(10.0, -k) * MatrixXd::Identity(3, 3));
    gaps.push_back((emm_moments(pred, j).mu_f - lin_moments(pred, j).mu_f).norm());
  }
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    const double ratio = gaps[i - 1] / gaps[i];
    EXPECT_GT(ratio, 7.0);
    EXPECT_LT(ratio, 14.0);
  }
}

TEST(Inference, LinearizedVarianceNeverBelowNoise) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Predictor pred = make_predictor(random_model(3200 + s));
    const JointInput j = joint_of(random_vector(3, 1.0, s), random_psd(3, 0.5, s));
    const OutputMoments l = lin_moments(pred, j);
    for (Index k = 0; k < 2; ++k) EXPECT_GE(l.sigma_f(k, k), pred.outputs[k].noise_var);
  }
}

TEST(Inference, RejectsInvalidJointInput) {
  const Predictor pred = make_predictor(random_model(5));
  MatrixXd bad = MatrixXd::Identity(3, 3);
  bad(0, 0) = -1.0;
  EXPECT_THROW(emm_moments(pred, joint_of(VectorXd::Zero(3), bad)), std::invalid_argument);
  MatrixXd asym = MatrixXd::Identity(3, 3);
  asym(0, 1) = 0.5;
  EXPECT_THROW(lin_moments(pred, joint_of(VectorXd::Zero(3), asym)), std::invalid_argument);
  EXPECT_THROW(emm_moments(pred, joint_of(VectorXd::Zero(2), MatrixXd::Zero(2, 2))), std::invalid_argument);
}

TEST(MonteCarlo, DeterministicAndScalesAsRootN) {
  const Predictor pred = make_predictor(random_model(4000));
  const JointInput j = joint_of(random_vector(3, 0.5, 1), 0.2 * MatrixXd::Identity(3, 3));
  const MonteCarloMoments a = mc_moments(pred, j, 10000, 9), b = mc_moments(pred, j, 10000, 9);
  EXPECT_EQ(flatten(a.moments), flatten(b.moments));
  const MonteCarloMoments big = mc_moments(pred, j, 100000, 9);
  const VectorXd r = flatten(a.standard_errors).array() / flatten(big.standard_errors).array();
  for (Index i = 0; i < r.size(); ++i) {
    EXPECT_GT(r(i), std::sqrt(10.0) * 0.8);
    EXPECT_LT(r(i), std::sqrt(10.0) * 1.25);
  }
  EXPECT_THROW(mc_moments(pred, j, 1, 0), std::invalid_argument);
}

TEST(MonteCarlo, PointInputHasNoCrossCovariance) {
  const Predictor pred = make_predictor(random_model(4001));
  const MonteCarloMoments mc = mc_moments(pred, joint_of(VectorXd::Constant(3, 0.2), MatrixXd::Zero(3, 3)), 1000, 1);
  EXPECT_TRUE(mc.moments.sigma_xf.isZero(0.0));
}

TEST(Propagate, ZeroWeightModelOnlyAddsNoise) {
  SSGPModel model = random_model(5000);
  for (auto& o : model.outputs) {
    o.w.setZero();
    o.b.setZero();
    o.target_mean = 0.0;
  }
  const Predictor pred = make_predictor(model);
  Belief b{random_vector(2, 1.0, 2), random_psd(2, 0.3, 3)};
  for (InferenceMethod m : {InferenceMethod::kExactMoments, InferenceMethod::kLinearized}) {
    const Belief n = propagate_belief(pred, b, VectorXd::Constant(1, 0.4), m);
    EXPECT_LT((n.mu - b.mu).norm(), 1e-15);
    const MatrixXd grow = n.sigma - b.sigma;
    EXPECT_NEAR(grow(0, 1), 0.0, 1e-14);
    for (Index k = 0; k < 2; ++k) EXPECT_GE(grow(k, k), pred.outputs[k].noise_var - 1e-15);
  }
}

TEST(Propagate, MatchesMonteCarloRollout) {
  const SSGPModel model = random_model(5100, {.n = 2, .m = 1, .r = 10});
  const Predictor pred = make_predictor(model);
  const Belief b{random_vector(2, 0.6, 4), random_psd(2, 0.15, 5) + 0.02 * MatrixXd::Identity(2, 2)};
  const VectorXd u = VectorXd::Constant(1, 0.3);
  const Belief next = propagate_belief(pred, b, u, InferenceMethod::kExactMoments);

  const Index n_samples = 1000000;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  const MatrixXd l = b.sigma.llt().matrixL();
  VectorXd sum = VectorXd::Zero(2);
  MatrixXd sum2 = MatrixXd::Zero(2, 2);
  const VectorXd shift = next.mu;
  for (Index i = 0; i < n_samples; ++i) {
    const VectorXd x = b.mu + l * (VectorXd(2) << normal(rng), normal(rng)).finished();
    VectorXd in(3);
    in << x, u;
    const PointPrediction p = predict_point(pred, in);
    VectorXd xn(2);
    for (Index k = 0; k < 2; ++k) xn(k) = x(k) + p.mean(k) + std::sqrt(p.variance(k)) * normal(rng);
    const VectorXd c = xn - shift;
    sum += c;
    sum2 += c * c.transpose();
  }
  const double nn = static_cast<double>(n_samples);
  const VectorXd mean = shift + sum / nn;
  const MatrixXd cov = (sum2 - sum * sum.transpose() / nn) / (nn - 1);
  for (Index k = 0; k < 2; ++k) EXPECT_LT(std::abs(mean(k) - next.mu(k)), 4.0 * std::sqrt(cov(k, k) / nn));
  for (Index p = 0; p < 2; ++p)
    for (Index q = 0; q < 2; ++q) {
      const double se = std::sqrt((cov(p, p) * cov(q, q) + cov(p, q) * cov(p, q)) / nn);
      EXPECT_LT(std::abs(cov(p, q) - next.sigma(p, q)), 4.0 * se) << p << q;
    }
}

TEST(Propagate, OutputCovarianceIsAlwaysPsd) {
  const Predictor pred = make_predictor(random_model(5200, {.n = 2, .m = 1, .r = 8}));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const Belief b{random_vector(2, 2.0, t), random_psd(2, std::pow(10.0, uni(rng)), t + 1)};
    const VectorXd u = VectorXd::Constant(1, uni(rng));
    const InferenceMethod m = t % 2 ? InferenceMethod::kLinearized : InferenceMethod::kExactMoments;
    const Belief n = propagate_belief(pred, b, u, m);
    EXPECT_TRUE(is_symmetric_psd(n.sigma, 1e-12, 0.0)) << t;
  }
}

TEST(Derivatives, ExactMomentsMatchFiniteDifferences) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Predictor pred = make_predictor(random_model(6000 + s, {.n = 2, .m = 1, .r = 8}));
    const FdReport rep = check_moment_derivatives(pred, random_joint(3, 0.3, s), InferenceMethod::kExactMoments);
    EXPECT_TRUE(rep.ok()) << rep.where;
  }
}

TEST(Derivatives, LinearizationMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const Predictor pred = make_predictor(random_model(6100 + s, {.n = 2, .m = 1, .r = 8}));
    const FdReport rep = check_moment_derivatives(pred, random_joint(3, 0.3, s), InferenceMethod::kLinearized);
    EXPECT_TRUE(rep.ok()) << rep.where;
  }
}

TEST(Derivatives, StructuralIdentities) {
  const Predictor pred = make_predictor(random_model(6200, {.n = 2, .m = 1, .r = 8}));
  const VectorXd mu = random_vector(3, 0.7, 1);
  const JointInput point = joint_of(mu, MatrixXd::Zero(3, 3));
  const MomentDerivatives e0 = emm_derivatives(pred, point).derivatives;
  const MomentDerivatives l0 = lin_derivatives(pred, point).derivatives;
  EXPECT_LT((e0.dmu_dmu - l0.dmu_dmu).cwiseAbs().maxCoeff(), 1e-12);
  for (Index k = 0; k < 2; ++k) {
    const InferenceWorkspace ws = inference_workspace(pred, point, k);
    EXPECT_LT((l0.dmu_dmu.row(k).transpose() - ws.a).cwiseAbs().maxCoeff(), 1e-13);
  }

  const JointInput j = random_joint(3, 0.3, 2);
  const MomentDerivatives e = emm_derivatives(pred, j).derivatives;
  const MomentDerivatives l = lin_derivatives(pred, j).derivatives;
  for (Index a = 0; a < 3; ++a)
    for (Index b = 0; b < 3; ++b)
      EXPECT_LT((e.dmu_dsigma.col(a + 3 * b) - e.dmu_dsigma.col(b + 3 * a)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(l.dmu_dsigma.isZero(0.0));
  std::vector<VectorXd> slope;
  for (Index k = 0; k < 2; ++k) slope.push_back(inference_workspace(pred, j, k).a);
  for (Index p = 0; p < 2; ++p)
    for (Index q = 0; q < 2; ++q) {
      const MatrixXd outer = 0.5 * (slope[p] * slope[q].transpose() + slope[q] * slope[p].transpose());
      const VectorXd flat = Eigen::Map<const VectorXd>(outer.data(), 9);
      EXPECT_LT((l.dsigma_f_dsigma.row(p + 2 * q).transpose() - flat).cwiseAbs().maxCoeff(), 1e-14);
    }
}
