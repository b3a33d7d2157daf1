#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "aptraj/config.hpp"
#include "aptraj/cost.hpp"
#include "aptraj/mpc.hpp"
#include "aptraj/plants.hpp"
#include "aptraj/ssgp.hpp"

namespace aptraj {

inline constexpr const char* kToolkitVersion = "0.1.0";

struct TrainReport {
  std::vector<double> nlml;          // per output, on the training split
  std::vector<double> train_rmse;    // per output
  std::vector<double> holdout_rmse;  // per output, empty when there is no holdout split
  Index n_train = 0;
  Index n_holdout = 0;
};

/// Splits off the trailing holdout fraction, fits hyperparameters (optionally)
/// and trains the model on the rest.
SSGPModel train_from_data(const RunConfig& cfg, const Dataset& data, TrainReport* report);

CostSpec cost_from_config(const RunConfig& cfg);
TaskSchedule task_from_config(const RunConfig& cfg, const PlantSpec& plant);
MpcOptions mpc_options_from_config(const RunConfig& cfg);
AdaptationConfig adaptation_from_config(const RunConfig& cfg);

/// Cost-prediction check: expected cost of a belief rollout under zero controls
/// versus sampled rollouts of the predictive model.
double mc_rollout_cost(const Predictor& pred, const Belief& x0, const std::vector<VectorXd>& controls,
                       const CostSpec& spec, Index n_particles, std::uint64_t seed);

nlohmann::json run_metadata(const std::string& command, const RunConfig& cfg);

// Command implementations; each writes its artifacts into `out`.
void cmd_train(const RunConfig& cfg, const std::filesystem::path& out);
void cmd_bench_inference(const RunConfig& cfg, const std::filesystem::path& out);
void cmd_optimize(const RunConfig& cfg, const std::filesystem::path& out);
void cmd_mpc(const RunConfig& cfg, const std::filesystem::path& out);

}  // namespace aptraj
