#pragma once

// Receding-horizon control with online model adaptation.

#include <random>
#include <string>
#include <vector>

#include "aptraj/ddp.hpp"
#include "aptraj/plants.hpp"
#include "aptraj/ssgp.hpp"

namespace aptraj {

struct AdaptationConfig {
  double lambda = 0.992;
  bool adapt_enabled = true;
  bool readd_prior = false;

  void validate() const;
};

struct MpcOptions {
  SolverOptions solver;       // bounds, tolerances and the iteration cap of the first solve
  InferenceMethod method = InferenceMethod::kExactMoments;
  Index horizon = 50;         // beliefs per plan
  int reopt_iters = 10;       // per-step budget after the first solve
  bool full_convergence = false;  // use solver.max_iters for every re-optimization
};

struct EpisodeRow {
  Index k = 0;
  VectorXd state;
  VectorXd control;
  double stage_cost = 0.0;
  Belief predicted;  // planned belief for the next state
  int iterations = 0;
  double wall_time = 0.0;  // seconds spent in re-optimization
  VectorXd next_state;
  VectorXd goal;
};

struct EpisodeLog {
  std::vector<EpisodeRow> rows;
  bool aborted = false;
  std::string abort_reason;

  double mean_stage_cost(std::size_t first, std::size_t count) const;
};

/// u_2, ..., u_H, u_H.
std::vector<VectorXd> warm_start_shift(const std::vector<VectorXd>& controls);

struct MpcStepResult {
  VectorXd next_state;
  TrajOptResult plan;
  EpisodeRow row;
  bool fallback = false;
};

/// Applies the plan's first control to `plant`, adapts `model` with the observed
/// transition, shifts the plan and re-optimizes from the observed state.
/// Goals come from `task`; only the weights of `spec` are used.
MpcStepResult mpc_step(const VectorXd& state, SSGPModel& model, const TrajOptResult& plan,
                       const CostSpec& spec, const TaskSchedule& task, const AdaptationConfig& cfg,
                       const MpcOptions& opts, const PlantSpec& plant, Index k, std::mt19937_64& rng);

/// Runs `steps` MPC steps from x0. Goals and plant parameters come from `task`;
/// only the weights of `spec` are used.
EpisodeLog run_episode(const PlantSpec& plant, const TaskSchedule& task, const CostSpec& spec, SSGPModel model,
                       const AdaptationConfig& cfg, const MpcOptions& opts, Index steps, std::uint64_t seed,
                       const VectorXd& x0);

/// CostSpec whose goal at local index j is task goal k + j.
CostSpec shifted_spec(const CostSpec& spec, const TaskSchedule& task, Index k);

}  // namespace aptraj
