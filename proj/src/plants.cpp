#include "aptraj/plants.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace aptraj {

double PlantSpec::param(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) throw std::invalid_argument("plant '" + name + "' has no parameter '" + key + "'");
  return it->second;
}

void PlantSpec::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("PlantSpec: dt must be positive");
  if (diffusion.rows() != n || diffusion.cols() != noise_cov.rows() || noise_cov.rows() != noise_cov.cols())
    throw std::invalid_argument("PlantSpec: diffusion/noise shapes are inconsistent");
  if (!is_symmetric_psd(noise_cov)) throw std::invalid_argument("PlantSpec: noise_cov must be PSD");
  if (control_box && (control_box->lo.size() != m || control_box->hi.size() != m ||
                      (control_box->lo.array() > control_box->hi.array()).any()))
    throw std::invalid_argument("PlantSpec: invalid control box");
  for (const auto& [k, v] : params)
    if (!std::isfinite(v)) throw std::invalid_argument("PlantSpec: parameter '" + k + "' is not finite");
}

namespace {

MatrixXd velocity_selector(Index n, Index first_velocity) {
  const Index p = n - first_velocity;
  MatrixXd c = MatrixXd::Zero(n, p);
  c.bottomRows(p).setIdentity();
  return c;
}

}  // namespace

PlantSpec make_pendulum() {
  PlantSpec p;
  p.name = "pendulum";
  p.kind = PlantKind::kPendulum;
  p.n = 2;
  p.m = 1;
  p.params = {{"mass", 1.0}, {"length", 1.0}, {"damping", 0.05}, {"gravity", 9.81}};
  p.dt = 0.05;
  p.diffusion = velocity_selector(2, 1);
  p.noise_cov = 1e-4 * MatrixXd::Identity(1, 1);
  p.control_box = ControlBounds{VectorXd::Constant(1, -10.0), VectorXd::Constant(1, 10.0)};
  p.state_lo = (VectorXd(2) << -std::numbers::pi, -4.0).finished();
  p.state_hi = (VectorXd(2) << std::numbers::pi, 4.0).finished();
  p.u_nominal = VectorXd::Zero(1);
  return p;
}

PlantSpec make_cartpole() {
  PlantSpec p;
  p.name = "cartpole";
  p.kind = PlantKind::kCartPole;
  p.n = 4;
  p.m = 1;
  p.params = {{"cart_mass", 1.0}, {"pole_mass", 0.1}, {"half_length", 0.5}, {"gravity", 9.81}};
  p.dt = 0.05;
  p.diffusion = velocity_selector(4, 2);
  p.noise_cov = 1e-4 * MatrixXd::Identity(2, 2);
  p.control_box = ControlBounds{VectorXd::Constant(1, -10.0), VectorXd::Constant(1, 10.0)};
  p.state_lo = (VectorXd(4) << -1.0, -0.5, -1.0, -1.0).finished();
  p.state_hi = (VectorXd(4) << 1.0, 0.5, 1.0, 1.0).finished();
  p.u_nominal = VectorXd::Zero(1);
  return p;
}

PlantSpec make_planar_quadrotor() {
  PlantSpec p;
  p.name = "quadrotor";
  p.kind = PlantKind::kPlanarQuadrotor;
  p.n = 6;
  p.m = 2;
  p.params = {{"mass", 0.5}, {"arm", 0.25}, {"inertia", 0.01}, {"gravity", 9.81}};
  p.dt = 0.05;
  p.diffusion = velocity_selector(6, 3);
  p.noise_cov = 1e-4 * MatrixXd::Identity(3, 3);
  p.control_box = ControlBounds{VectorXd::Constant(2, 0.5), VectorXd::Constant(2, 3.0)};
  p.state_lo = (VectorXd(6) << -1.5, -1.5, -0.5, -1.0, -1.0, -2.0).finished();
  p.state_hi = -p.state_lo;
  p.u_nominal = VectorXd::Constant(2, 0.5 * 0.5 * 9.81);
  return p;
}

PlantSpec make_plant(const std::string& name) {
  if (name == "pendulum") return make_pendulum();
  if (name == "cartpole") return make_cartpole();
  if (name == "quadrotor") return make_planar_quadrotor();
  throw std::invalid_argument("unknown plant '" + name + "' (expected pendulum, cartpole or quadrotor)");
}

PlantSpec with_params(const PlantSpec& plant, const ParamMap& overrides) {
  PlantSpec out = plant;
  for (const auto& [k, v] : overrides) {
    if (!out.params.count(k)) throw std::invalid_argument("plant '" + plant.name + "' has no parameter '" + k + "'");
    out.params[k] = v;
  }
  return out;
}

VectorXd dynamics(const PlantSpec& plant, const VectorXd& x, const VectorXd& u) {
  if (x.size() != plant.n || u.size() != plant.m) throw std::invalid_argument("dynamics: dimension mismatch");
  VectorXd f(plant.n);
  switch (plant.kind) {
    case PlantKind::kPendulum: {
      const double m = plant.param("mass"), l = plant.param("length");
      const double b = plant.param("damping"), g = plant.param("gravity");
      f(0) = x(1);
      f(1) = (u(0) - b * x(1) - m * g * l * std::sin(x(0))) / (m * l * l);
      break;
    }
    case PlantKind::kCartPole: {
      const double mc = plant.param("cart_mass"), mp = plant.param("pole_mass");
      const double l = plant.param("half_length"), g = plant.param("gravity");
      const double total = mc + mp;
      const double th = x(1), thd = x(3);
      const double s = std::sin(th), c = std::cos(th);
      const double tmp = (u(0) + mp * l * thd * thd * s) / total;
      const double thdd = (g * s - c * tmp) / (l * (4.0 / 3.0 - mp * c * c / total));
      f(0) = x(2);
      f(1) = thd;
      f(2) = tmp - mp * l * thdd * c / total;
      f(3) = thdd;
      break;
    }
    case PlantKind::kPlanarQuadrotor: {
      const double m = plant.param("mass"), arm = plant.param("arm");
      const double inertia = plant.param("inertia"), g = plant.param("gravity");
      const double thrust = u(0) + u(1);
      f.head(3) = x.segment(3, 3);
      f(3) = -thrust * std::sin(x(2)) / m;
      f(4) = thrust * std::cos(x(2)) / m - g;
      f(5) = arm * (u(1) - u(0)) / inertia;
      break;
    }
  }
  return f;
}

VectorXd clamp_control(const PlantSpec& plant, const VectorXd& u) {
  return plant.control_box ? plant.control_box->clamp(u) : u;
}

VectorXd step_deterministic(const PlantSpec& plant, const VectorXd& x, const VectorXd& u) {
  VectorXd next = x + plant.dt * dynamics(plant, x, clamp_control(plant, u));
  if (!next.allFinite()) throw std::runtime_error("step: plant state became non-finite");
  return next;
}

VectorXd step(const PlantSpec& plant, const VectorXd& x, const VectorXd& u, std::mt19937_64& rng) {
  if (!x.allFinite() || !u.allFinite()) throw std::runtime_error("step: non-finite state or control");
  VectorXd next = step_deterministic(plant, x, u);
  const Index p = plant.noise_cov.rows();
  if (p > 0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    VectorXd z(p);
    for (Index i = 0; i < p; ++i) z(i) = normal(rng);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(plant.noise_cov);
    const MatrixXd root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    next += std::sqrt(plant.dt) * plant.diffusion * (root * z);
  }
  if (!next.allFinite()) throw std::runtime_error("step: plant state became non-finite");
  return next;
}

double mechanical_energy(const PlantSpec& plant, const VectorXd& x) {
  switch (plant.kind) {
    case PlantKind::kPendulum: {
      const double m = plant.param("mass"), l = plant.param("length"), g = plant.param("gravity");
      return 0.5 * m * l * l * x(1) * x(1) - m * g * l * std::cos(x(0));
    }
    case PlantKind::kCartPole: {
      const double mc = plant.param("cart_mass"), mp = plant.param("pole_mass");
      const double l = plant.param("half_length"), g = plant.param("gravity");
      const double xd = x(2), thd = x(3), c = std::cos(x(1));
      return 0.5 * (mc + mp) * xd * xd + mp * l * c * xd * thd + (2.0 / 3.0) * mp * l * l * thd * thd +
             mp * g * l * c;
    }
    case PlantKind::kPlanarQuadrotor:
      break;
  }
  throw std::invalid_argument("mechanical_energy: defined for pendulum and cart-pole only");
}

ScheduleValue schedule_at(const TaskSchedule& task, Index k) {
  if (k < 0) throw std::invalid_argument("schedule_at: k must be >= 0");
  ScheduleValue v;
  v.goal = task.goal_fn(k);
  if (task.param_fn) v.params = task.param_fn(k);
  return v;
}

TaskSchedule constant_task(VectorXd goal) {
  TaskSchedule t;
  t.goal_fn = [g = std::move(goal)](Index) { return g; };
  return t;
}

double linear_mass(double initial, double rate, Index k) {
  return std::max(initial - rate * static_cast<double>(k), 0.1 * initial);
}

VectorXd circular_goal(Index n, double radius, double period, double cx, double cz, Index k) {
  if (n < 2) throw std::invalid_argument("circular_goal: need at least two state entries");
  const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) / period;
  VectorXd g = VectorXd::Zero(n);
  g(0) = cx + radius * std::cos(phase);
  g(1) = cz + radius * std::sin(phase);
  return g;
}

Dataset collect_offline(const PlantSpec& plant, Index n_points, double excitation, std::uint64_t seed,
                        const OfflineOptions& opts) {
  if (n_points < 1) throw std::invalid_argument("collect_offline: n_points must be >= 1");
  if (opts.segment_length < 1) throw std::invalid_argument("collect_offline: segment_length must be >= 1");
  plant.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Dataset data;
  data.inputs.resize(n_points, plant.n + plant.m);
  data.targets.resize(n_points, plant.n);
  VectorXd x(plant.n);
  for (Index i = 0; i < n_points; ++i) {
    if (i % opts.segment_length == 0)
      for (Index d = 0; d < plant.n; ++d)
        x(d) = plant.state_lo(d) + (plant.state_hi(d) - plant.state_lo(d)) * unit(rng);
    VectorXd u(plant.m);
    for (Index j = 0; j < plant.m; ++j) u(j) = plant.u_nominal(j) + excitation * (2.0 * unit(rng) - 1.0);
    u = clamp_control(plant, u);
    const VectorXd next = step(plant, x, u, rng);
    data.inputs.row(i) << x.transpose(), u.transpose();
    data.targets.row(i) = (next - x).transpose();
    x = next;
  }
  return data;
}

}  // namespace aptraj
