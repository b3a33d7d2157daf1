#pragma once

// Stochastic simulation plants: x' = x + dt F(x, u) + sqrt(dt) C z, z ~ N(0, Sigma_w).

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>

#include "aptraj/ddp.hpp"
#include "aptraj/ssgp.hpp"

namespace aptraj {

enum class PlantKind { kPendulum, kCartPole, kPlanarQuadrotor };

using ParamMap = std::map<std::string, double>;

struct PlantSpec {
  std::string name;
  PlantKind kind = PlantKind::kPendulum;
  Index n = 0;
  Index m = 0;
  ParamMap params;
  double dt = 0.05;
  MatrixXd diffusion;  // n x p
  MatrixXd noise_cov;  // p x p
  std::optional<ControlBounds> control_box;
  VectorXd state_lo, state_hi;  // initial-state sampling box for offline data
  VectorXd u_nominal;           // center of the excitation box

  double param(const std::string& key) const;
  void validate() const;
};

PlantSpec make_pendulum();
PlantSpec make_cartpole();
PlantSpec make_planar_quadrotor();
/// "pendulum", "cartpole" or "quadrotor".
PlantSpec make_plant(const std::string& name);

/// Copy of the plant with the given parameters replaced; unknown keys are rejected.
PlantSpec with_params(const PlantSpec& plant, const ParamMap& overrides);

VectorXd dynamics(const PlantSpec& plant, const VectorXd& x, const VectorXd& u);

/// One Euler-Maruyama step; the control is clamped to the plant box first.
VectorXd step(const PlantSpec& plant, const VectorXd& x, const VectorXd& u, std::mt19937_64& rng);

/// Noise-free Euler step.
VectorXd step_deterministic(const PlantSpec& plant, const VectorXd& x, const VectorXd& u);

VectorXd clamp_control(const PlantSpec& plant, const VectorXd& u);

/// Total mechanical energy of the pendulum or cart-pole.
double mechanical_energy(const PlantSpec& plant, const VectorXd& x);

struct TaskSchedule {
  std::function<VectorXd(Index)> goal_fn;
  std::function<ParamMap(Index)> param_fn;
};

struct ScheduleValue {
  VectorXd goal;
  ParamMap params;
};

ScheduleValue schedule_at(const TaskSchedule& task, Index k);

TaskSchedule constant_task(VectorXd goal);

/// max(initial - rate k, 0.1 initial).
double linear_mass(double initial, double rate, Index k);

/// Planar goal (cx + radius cos(2 pi k / period), cz + radius sin(2 pi k / period)) padded with zeros to n.
VectorXd circular_goal(Index n, double radius, double period, double cx, double cz, Index k);

struct OfflineOptions {
  Index segment_length = 10;  // steps per random rollout before resampling the initial state
};

/// Random-control rollouts from random initial states; inputs are (x, u), targets x' - x.
Dataset collect_offline(const PlantSpec& plant, Index n_points, double excitation, std::uint64_t seed,
                        const OfflineOptions& opts = {});

}  // namespace aptraj
