#include <gtest/gtest.h>

#include <numbers>

#include "aptraj/mpc.hpp"

using namespace aptraj;

namespace {

SSGPModel pendulum_model(Index r = 30) {
  const PlantSpec p = make_pendulum();
  const Dataset d = collect_offline(p, 400, 10.0, 4);
  Hyperparameters h0, h1;
  h0.sigma_f = 0.5;
  h0.sigma_n = 1e-3;
  h0.lengthscales = (VectorXd(3) << 3.0, 5.0, 20.0).finished();
  h1.sigma_f = 1.0;
  h1.sigma_n = 3e-3;
  h1.lengthscales = (VectorXd(3) << 1.5, 8.0, 15.0).finished();
  return train_batch(d, {h0, h1}, r, {output_seed(4, 0), output_seed(4, 1)});
}

CostSpec pendulum_cost() {
  return CostSpec::make((MatrixXd(2, 2) << 1.0, 0.0, 0.0, 0.1).finished(), 0.01 * MatrixXd::Identity(1, 1),
                        (VectorXd(2) << std::numbers::pi, 0.0).finished());
}

MpcOptions short_options() {
  MpcOptions o;
  o.horizon = 10;
  o.reopt_iters = 3;
  o.solver.max_iters = 10;
  o.solver.tol = 1e-4;
  o.solver.bounds = make_pendulum().control_box;
  return o;
}

}  // namespace

TEST(WarmStart, ShiftRule) {
  const std::vector<VectorXd> u{VectorXd::Constant(1, 1), VectorXd::Constant(1, 2), VectorXd::Constant(1, 3)};
  const auto s = warm_start_shift(u);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0](0), 2);
  EXPECT_EQ(s[1](0), 3);
  EXPECT_EQ(s[2](0), 3);
  const std::vector<VectorXd> one{VectorXd::Constant(1, 7)};
  EXPECT_EQ(warm_start_shift(one)[0](0), 7);
  std::vector<VectorXd> rep = u;
  for (int i = 0; i < 3; ++i) rep = warm_start_shift(rep);
  for (const VectorXd& v : rep) EXPECT_EQ(v(0), 3);
  EXPECT_THROW(warm_start_shift({}), std::invalid_argument);
}

TEST(Mpc, ShiftedSpecOffsetsGoals) {
  TaskSchedule t;
  t.goal_fn = [](Index k) { return VectorXd::Constant(2, static_cast<double>(k)); };
  const CostSpec s = shifted_spec(pendulum_cost(), t, 5);
  EXPECT_EQ(s.goal(0)(0), 5.0);
  EXPECT_EQ(s.goal(3)(1), 8.0);
}

TEST(Mpc, StepRecordsTrainingPairAndAdapts) {
  SSGPModel model = pendulum_model();
  const SSGPModel before = model;
  const PlantSpec plant = make_pendulum();
  const CostSpec cost = pendulum_cost();
  const TaskSchedule task = constant_task(cost.goal(0));
  const MpcOptions opts = short_options();
  const VectorXd x0 = (VectorXd(2) << std::numbers::pi - 0.3, 0.0).finished();
  const SSGPBeliefDynamics dyn(model, opts.method);
  const TrajOptResult plan =
      optimize(dyn, Belief::point(x0), std::vector<VectorXd>(9, VectorXd::Zero(1)), cost, opts.solver);
  std::mt19937_64 rng(3);
  const MpcStepResult r = mpc_step(x0, model, plan, cost, task, AdaptationConfig{}, opts, plant, 0, rng);

  EXPECT_EQ(r.row.state, x0);
  EXPECT_EQ(r.row.control, plan.controls.front());
  EXPECT_EQ(r.row.next_state, r.next_state);
  EXPECT_EQ(r.row.predicted.mu, plan.beliefs[1].mu);
  const VectorXd e = x0 - cost.goal(0);
  EXPECT_DOUBLE_EQ(r.row.stage_cost, e.dot(cost.Q * e) + r.row.control.dot(cost.R * r.row.control));

  SSGPModel replay = before;
  VectorXd x_tilde(3);
  x_tilde << r.row.state, r.row.control;
  adapt(replay, x_tilde, r.row.next_state - r.row.state, AdaptOptions{0.992, false});
  for (Index d = 0; d < 2; ++d) EXPECT_EQ(replay.outputs[d].w, model.outputs[d].w);
  EXPECT_EQ(r.plan.controls.size(), 9u);
  EXPECT_LE(r.plan.iterations, opts.reopt_iters);
  EXPECT_EQ(r.plan.beliefs.front().sigma, MatrixXd::Zero(2, 2));
}

TEST(Mpc, AdaptationDisabledLeavesModelUnchanged) {
  SSGPModel model = pendulum_model();
  const SSGPModel before = model;
  const CostSpec cost = pendulum_cost();
  const MpcOptions opts = short_options();
  const VectorXd x0 = (VectorXd(2) << 3.0, 0.0).finished();
  const TrajOptResult plan = optimize(SSGPBeliefDynamics(model, opts.method), Belief::point(x0),
                                      std::vector<VectorXd>(9, VectorXd::Zero(1)), cost, opts.solver);
  std::mt19937_64 rng(3);
  AdaptationConfig cfg;
  cfg.adapt_enabled = false;
  mpc_step(x0, model, plan, cost, constant_task(cost.goal(0)), cfg, opts, make_pendulum(), 0, rng);
  for (Index d = 0; d < 2; ++d) EXPECT_EQ(before.outputs[d].w, model.outputs[d].w);
}

TEST(Mpc, PlanMeanMatchesModelLoopback) {
  // With the learned mean acting as the plant, the realized state is the planned mean.
  const SSGPModel model = pendulum_model();
  const CostSpec cost = pendulum_cost();
  const MpcOptions opts = short_options();
  const VectorXd x0 = (VectorXd(2) << 2.9, 0.1).finished();
  const TrajOptResult plan = optimize(SSGPBeliefDynamics(model, opts.method), Belief::point(x0),
                                      std::vector<VectorXd>(9, VectorXd::Zero(1)), cost, opts.solver);
  VectorXd in(3);
  in << x0, plan.controls[0];
  const VectorXd x1 = x0 + predict_point(model, in).mean;
  EXPECT_LT((x1 - plan.beliefs[1].mu).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Mpc, EpisodeLengthDeterminismAndMassSchedule) {
  const SSGPModel model = pendulum_model();
  const CostSpec cost = pendulum_cost();
  const MpcOptions opts = short_options();
  const VectorXd x0 = (VectorXd(2) << std::numbers::pi - 0.2, 0.0).finished();
  TaskSchedule task = constant_task(cost.goal(0));
  const EpisodeLog one = run_episode(make_pendulum(), task, cost, model, {}, opts, 1, 5, x0);
  EXPECT_EQ(one.rows.size(), 1u);
  EXPECT_FALSE(one.aborted);

  task.param_fn = [](Index k) { return ParamMap{{"mass", k < 3 ? 1.0 : 2.0}}; };
  const EpisodeLog a = run_episode(make_pendulum(), task, cost, model, {}, opts, 6, 5, x0);
  const EpisodeLog b = run_episode(make_pendulum(), task, cost, model, {}, opts, 6, 5, x0);
  ASSERT_EQ(a.rows.size(), 6u);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].next_state, b.rows[i].next_state);
    EXPECT_EQ(a.rows[i].control, b.rows[i].control);
    EXPECT_EQ(i + 1 < a.rows.size() ? a.rows[i + 1].state : a.rows[i].next_state, a.rows[i].next_state);
  }
  EXPECT_THROW(run_episode(make_pendulum(), task, cost, model, {}, opts, 0, 5, x0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(a.mean_stage_cost(0, 2), 0.5 * (a.rows[0].stage_cost + a.rows[1].stage_cost));
}

TEST(Mpc, QuadrotorControlsStayInBox) {
  const PlantSpec plant = make_planar_quadrotor();
  const Dataset d = collect_offline(plant, 300, 1.0, 8);
  std::vector<Hyperparameters> hs(6);
  std::vector<std::uint64_t> seeds(6);
  for (Index k = 0; k < 6; ++k) {
    hs[k].sigma_f = 1.0;
    hs[k].sigma_n = 0.01;
    hs[k].lengthscales = VectorXd::Constant(8, 3.0);
    seeds[k] = output_seed(8, k);
  }
  const SSGPModel model = train_batch(d, hs, 10, seeds);
  const CostSpec cost = CostSpec::make(MatrixXd::Identity(6, 6), 0.01 * MatrixXd::Identity(2, 2),
                                       (VectorXd(6) << 0.5, 0.5, 0, 0, 0, 0).finished());
  MpcOptions opts;
  opts.horizon = 8;
  opts.reopt_iters = 2;
  opts.solver.max_iters = 5;
  opts.solver.bounds = plant.control_box;
  opts.method = InferenceMethod::kLinearized;
  const EpisodeLog log =
      run_episode(plant, constant_task(cost.goal(0)), cost, model, {}, opts, 10, 2, VectorXd::Zero(6));
  for (const EpisodeRow& r : log.rows) {
    EXPECT_GE(r.control.minCoeff(), 0.5);
    EXPECT_LE(r.control.maxCoeff(), 3.0);
  }
}
