#include "aptraj/mpc.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace aptraj {

void AdaptationConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("AdaptationConfig: lambda must lie in (0, 1)");
}

double EpisodeLog::mean_stage_cost(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > rows.size())
    throw std::invalid_argument("EpisodeLog::mean_stage_cost: range outside the log");
  double s = 0.0;
  for (std::size_t i = first; i < first + count; ++i) s += rows[i].stage_cost;
  return s / static_cast<double>(count);
}

std::vector<VectorXd> warm_start_shift(const std::vector<VectorXd>& controls) {
  if (controls.empty()) throw std::invalid_argument("warm_start_shift: empty control sequence");
  std::vector<VectorXd> out(controls.begin() + 1, controls.end());
  out.push_back(controls.back());
  return out;
}

CostSpec shifted_spec(const CostSpec& spec, const TaskSchedule& task, Index k) {
  CostSpec s = spec;
  s.goal = [goal = task.goal_fn, k](Index j) { return goal(k + j); };
  return s;
}

namespace {

SolverOptions reopt_options(const MpcOptions& opts) {
  SolverOptions s = opts.solver;
  if (!opts.full_convergence) s.max_iters = opts.reopt_iters;
  return s;
}

}  // namespace

MpcStepResult mpc_step(const VectorXd& state, SSGPModel& model, const TrajOptResult& plan,
                       const CostSpec& spec, const TaskSchedule& task, const AdaptationConfig& cfg,
                       const MpcOptions& opts, const PlantSpec& plant, Index k, std::mt19937_64& rng) {
  cfg.validate();
  if (plan.controls.empty() || plan.beliefs.size() < 2)
    throw std::invalid_argument("mpc_step: plan horizon must be >= 2");
  const ScheduleValue now = schedule_at(task, k);
  const PlantSpec plant_k = with_params(plant, now.params);

  MpcStepResult res;
  EpisodeRow& row = res.row;
  row.k = k;
  row.state = state;
  row.goal = now.goal;
  row.predicted = plan.beliefs[1];
  row.control = clamp_control(plant_k, plan.controls.front());
  if (opts.solver.bounds) row.control = opts.solver.bounds->clamp(row.control);
  const VectorXd e = state - now.goal;
  row.stage_cost = e.dot(spec.Q * e) + row.control.dot(spec.R * row.control);

  res.next_state = step(plant_k, state, row.control, rng);
  row.next_state = res.next_state;

  if (cfg.adapt_enabled) {
    VectorXd x_tilde(state.size() + row.control.size());
    x_tilde << state, row.control;
    adapt(model, x_tilde, res.next_state - state, AdaptOptions{cfg.lambda, cfg.readd_prior});
  }

  const std::vector<VectorXd> shifted = warm_start_shift(plan.controls);
  const CostSpec spec_next = shifted_spec(spec, task, k + 1);
  const Belief start = Belief::point(res.next_state);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const SSGPBeliefDynamics dyn(model, opts.method);
    res.plan = optimize(dyn, start, shifted, spec_next, reopt_options(opts));
  } catch (const std::exception&) {
    res.fallback = true;
    res.plan = TrajOptResult{};
    res.plan.controls = shifted;
    res.plan.beliefs.assign(shifted.size() + 1, start);
    res.plan.iterations = 0;
  }
  row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  row.iterations = res.plan.iterations;
  return res;
}

EpisodeLog run_episode(const PlantSpec& plant, const TaskSchedule& task, const CostSpec& spec, SSGPModel model,
                       const AdaptationConfig& cfg, const MpcOptions& opts, Index steps, std::uint64_t seed,
                       const VectorXd& x0) {
  if (steps < 1) throw std::invalid_argument("run_episode: steps must be >= 1");
  if (opts.horizon < 2) throw std::invalid_argument("run_episode: horizon must be >= 2");
  cfg.validate();
  std::mt19937_64 rng(seed);
  EpisodeLog log;

  std::vector<VectorXd> init(static_cast<std::size_t>(opts.horizon - 1), plant.u_nominal);
  TrajOptResult plan;
  const SSGPBeliefDynamics dyn0(model, opts.method);
  plan = optimize(dyn0, Belief::point(x0), init, shifted_spec(spec, task, 0), opts.solver);

  VectorXd x = x0;
  for (Index k = 0; k < steps; ++k) {
    MpcStepResult r;
    try {
      r = mpc_step(x, model, plan, spec, task, cfg, opts, plant, k, rng);
    } catch (const std::exception& ex) {
      log.aborted = true;
      log.abort_reason = ex.what();
      break;
    }
    log.rows.push_back(r.row);
    x = r.next_state;
    plan = std::move(r.plan);
    if (!x.allFinite()) {
      log.aborted = true;
      log.abort_reason = "non-finite state";
      break;
    }
  }
  return log;
}

}  // namespace aptraj
