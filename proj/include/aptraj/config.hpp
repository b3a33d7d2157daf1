#pragma once

// Flat "key = value" run configuration. Lines starting with '#' are comments;
// vectors are comma-separated. Unknown keys and malformed values are errors.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "aptraj/linalg.hpp"

namespace aptraj {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // plant and data
  std::string plant = "pendulum";
  Index n_offline = 500;
  double excitation = -1.0;  // <0: plant control half-width
  Index segment_length = 10;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 1;

  // model
  Index r = 50;
  bool optimize_hyper = true;
  int hyper_iters = 200;
  std::string model_path;  // empty: <out>/model.json

  // planning
  std::string method = "emm";
  Index horizon = 50;
  int max_iters = 100;
  int reopt_iters = 10;
  double tol = 1e-6;
  bool full_convergence = false;
  bool use_bounds = true;
  VectorXd u_lo, u_hi;  // empty: plant box
  VectorXd q_diag, r_diag;
  double qf_scale = 10.0;
  VectorXd goal, x0;    // empty: plant defaults

  // adaptation and episodes
  double lambda = 0.992;
  bool adapt = true;
  bool readd_prior = false;
  Index steps = 300;
  Index n_seeds = 1;

  // task schedule
  std::string schedule_param = "mass";
  double mass_rate = 0.0;
  Index param_change_step = -1;
  double param_change_factor = 1.0;
  double target_radius = 0.0;
  double target_period = 400.0;
  double target_cx = 0.0;
  double target_cz = 0.0;

  // inference benchmark
  std::vector<Index> bench_r{10, 20, 50, 100};
  std::vector<Index> bench_state_dims{2, 4};
  Index bench_control_dim = 1;
  Index bench_horizon = 10;
  Index mc_samples = 20000;
  int bench_reps = 5;
};

/// Parses and validates; plant-dependent defaults are filled in.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Fills plant-dependent defaults and checks every field; throws ConfigError.
void resolve_and_validate(RunConfig& cfg);

/// Every key with its resolved value, in declaration order.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg);

}  // namespace aptraj
