#include "aptraj/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "aptraj/csv.hpp"
#include "aptraj/inference.hpp"
#include "aptraj/ssgp_io.hpp"

namespace aptraj {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void write_table(const fs::path& path, const CsvTable& t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_csv(os, t);
}

fs::path model_path(const RunConfig& cfg, const fs::path& out) {
  return cfg.model_path.empty() ? out / "model.json" : fs::path(cfg.model_path);
}

Dataset rows_of(const Dataset& d, Index first, Index count) {
  return {d.inputs.middleRows(first, count), d.targets.middleRows(first, count)};
}

double rmse(const Predictor& pred, const Dataset& d, Index out) {
  if (d.size() == 0) return 0.0;
  double s = 0.0;
  for (Index i = 0; i < d.size(); ++i) {
    const double e = predict_point(pred, d.inputs.row(i).transpose()).mean(out) - d.targets(i, out);
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(d.size()));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
double min_time(int reps, F&& f) {
  double best = INFINITY;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

SSGPModel synthetic_model(Index n, Index m, Index r, std::uint64_t seed) {
  const Index dim = n + m;
  const Index points = std::max<Index>(200, 4 * r);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.inputs.resize(points, dim);
  d.targets.resize(points, n);
  for (Index i = 0; i < points; ++i)
    for (Index k = 0; k < dim; ++k) d.inputs(i, k) = normal(rng);
  for (Index i = 0; i < points; ++i)
    for (Index o = 0; o < n; ++o)
      d.targets(i, o) = 0.1 * std::sin(d.inputs.row(i).sum() + static_cast<double>(o)) + 0.01 * normal(rng);
  std::vector<Hyperparameters> hypers(n);
  std::vector<std::uint64_t> seeds(n);
  for (Index o = 0; o < n; ++o) {
    hypers[o].sigma_f = 0.2;
    hypers[o].sigma_n = 0.02;
    hypers[o].lengthscales = VectorXd::Constant(dim, 1.5);
    seeds[o] = output_seed(seed, o);
  }
  return train_batch(d, hypers, r, seeds);
}

}  // namespace

SSGPModel train_from_data(const RunConfig& cfg, const Dataset& data, TrainReport* report) {
  const Index n_hold = static_cast<Index>(std::floor(cfg.holdout_fraction * static_cast<double>(data.size())));
  const Index n_train = data.size() - n_hold;
  if (n_train < 1) throw std::invalid_argument("train_from_data: no training points left after the holdout split");
  const Dataset train = rows_of(data, 0, n_train);
  const Dataset hold = rows_of(data, n_train, n_hold);
  const Index n_out = data.targets.cols();

  std::vector<Hyperparameters> hypers;
  if (cfg.optimize_hyper)
    hypers = optimize_hyperparameters(train, cfg.r, cfg.seed, cfg.hyper_iters);
  else
    for (Index d = 0; d < n_out; ++d) hypers.push_back(initial_hyperparameters(train, d));
  std::vector<std::uint64_t> seeds;
  for (Index d = 0; d < n_out; ++d) seeds.push_back(output_seed(cfg.seed, d));
  SSGPModel model = train_batch(train, hypers, cfg.r, seeds);

  if (report) {
    const Predictor pred = make_predictor(model);
    report->n_train = n_train;
    report->n_holdout = n_hold;
    report->nlml.clear();
    report->train_rmse.clear();
    report->holdout_rmse.clear();
    for (Index d = 0; d < n_out; ++d) {
      const OutputModel& o = model.outputs[d];
      report->nlml.push_back(-log_marginal_likelihood(train, o.hyper, o.map, d).value);
      report->train_rmse.push_back(rmse(pred, train, d));
      if (n_hold > 0) report->holdout_rmse.push_back(rmse(pred, hold, d));
    }
  }
  return model;
}

CostSpec cost_from_config(const RunConfig& cfg) {
  const MatrixXd q = cfg.q_diag.asDiagonal();
  return CostSpec::make(q, cfg.r_diag.asDiagonal(), cfg.goal, MatrixXd(cfg.qf_scale * q));
}

TaskSchedule task_from_config(const RunConfig& cfg, const PlantSpec& plant) {
  TaskSchedule t;
  const Index n = plant.n;
  if (cfg.target_radius > 0.0) {
    t.goal_fn = [n, radius = cfg.target_radius, period = cfg.target_period, cx = cfg.target_cx,
                 cz = cfg.target_cz](Index k) { return circular_goal(n, radius, period, cx, cz, k); };
  } else {
    t.goal_fn = [g = cfg.goal](Index) { return g; };
  }
  if (cfg.mass_rate <= 0.0 && cfg.param_change_step < 0) return t;
  const double initial = plant.param(cfg.schedule_param);
  t.param_fn = [key = cfg.schedule_param, initial, rate = cfg.mass_rate, step = cfg.param_change_step,
                factor = cfg.param_change_factor](Index k) {
    double v = rate > 0.0 ? linear_mass(initial, rate, k) : initial;
    if (step >= 0 && k >= step) v *= factor;
    return ParamMap{{key, v}};
  };
  return t;
}

MpcOptions mpc_options_from_config(const RunConfig& cfg) {
  MpcOptions o;
  o.method = inference_method_from_string(cfg.method);
  o.horizon = cfg.horizon;
  o.reopt_iters = cfg.reopt_iters;
  o.full_convergence = cfg.full_convergence;
  o.solver.max_iters = cfg.max_iters;
  o.solver.tol = cfg.tol;
  if (cfg.use_bounds) o.solver.bounds = ControlBounds{cfg.u_lo, cfg.u_hi};
  return o;
}

AdaptationConfig adaptation_from_config(const RunConfig& cfg) {
  return AdaptationConfig{cfg.lambda, cfg.adapt, cfg.readd_prior};
}

double mc_rollout_cost(const Predictor& pred, const Belief& x0, const std::vector<VectorXd>& controls,
                       const CostSpec& spec, Index n_particles, std::uint64_t seed) {
  const Index n = x0.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(x0.sigma);
  const MatrixXd root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  double total = 0.0;
  for (Index p = 0; p < n_particles; ++p) {
    VectorXd z(n);
    for (Index i = 0; i < n; ++i) z(i) = normal(rng);
    VectorXd x = x0.mu + root * z;
    double c = 0.0;
    for (std::size_t k = 0; k < controls.size(); ++k) {
      const VectorXd e = x - spec.goal(static_cast<Index>(k));
      c += e.dot(spec.Q * e) + controls[k].dot(spec.R * controls[k]);
      VectorXd xt(n + controls[k].size());
      xt << x, controls[k];
      const PointPrediction pp = predict_point(pred, xt);
      for (Index i = 0; i < n; ++i) x(i) += pp.mean(i) + std::sqrt(pp.variance(i)) * normal(rng);
    }
    const VectorXd e = x - spec.goal(static_cast<Index>(controls.size()));
    c += e.dot(spec.Qf * e);
    total += c;
  }
  return total / static_cast<double>(n_particles);
}

json run_metadata(const std::string& command, const RunConfig& cfg) {
  json conf = json::object();
  for (const auto& [k, v] : config_entries(cfg)) conf[k] = v;
  return json{{"command", command}, {"toolkit_version", kToolkitVersion}, {"config", conf},
              {"seed", cfg.seed}, {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                        std::to_string(EIGEN_MINOR_VERSION)}};
}

void cmd_train(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const PlantSpec plant = make_plant(cfg.plant);
  OfflineOptions oo;
  oo.segment_length = cfg.segment_length;
  const Dataset data = collect_offline(plant, cfg.n_offline, cfg.excitation, cfg.seed, oo);
  TrainReport rep;
  const SSGPModel model = train_from_data(cfg, data, &rep);
  save_model(model, model_path(cfg, out));
  json outputs = json::array();
  for (std::size_t d = 0; d < rep.nlml.size(); ++d) {
    json o{{"output", d}, {"nlml", rep.nlml[d]}, {"train_rmse", rep.train_rmse[d]},
           {"sigma_f", model.outputs[d].hyper.sigma_f}, {"sigma_n", model.outputs[d].hyper.sigma_n},
           {"lengthscales", vector_to_json(model.outputs[d].hyper.lengthscales)}};
    if (!rep.holdout_rmse.empty()) o["holdout_rmse"] = rep.holdout_rmse[d];
    outputs.push_back(o);
  }
  const double noise_std = std::sqrt(plant.dt * plant.noise_cov(0, 0));
  write_json(out / "train_report.json", json{{"n_train", rep.n_train}, {"n_holdout", rep.n_holdout},
                                             {"plant_step_noise_std", noise_std}, {"outputs", outputs}});
  write_json(out / "train_metadata.json", run_metadata("train", cfg));
}

void cmd_bench_inference(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  CsvTable t;
  t.header = {"method", "r", "state_dim", "control_dim", "input_scale", "mean_error", "time_seconds"};
  const Index m = cfg.bench_control_dim;
  for (Index n : cfg.bench_state_dims) {
    for (Index r : cfg.bench_r) {
      const SSGPModel model = synthetic_model(n, m, r, cfg.seed + 31 * static_cast<std::uint64_t>(n));
      const Predictor pred = make_predictor(model);
      const Index dim = n + m;
      JointInput joint{VectorXd::Constant(dim, 0.1), 0.05 * MatrixXd::Identity(dim, dim)};
      joint.sigma.bottomRightCorner(m, m).setZero();
      const double t_emm = min_time(cfg.bench_reps, [&] { (void)emm_moments(pred, joint); });
      const double t_lin = min_time(cfg.bench_reps, [&] { (void)lin_moments(pred, joint); });

      // Multi-step expected-cost prediction against sampled rollouts.
      CostSpec spec = CostSpec::make(MatrixXd::Identity(n, n), MatrixXd::Identity(m, m), VectorXd::Zero(n));
      const Belief x0{VectorXd::Constant(n, 0.1), 0.05 * MatrixXd::Identity(n, n)};
      const std::vector<VectorXd> controls(static_cast<std::size_t>(cfg.bench_horizon), VectorXd::Zero(m));
      const double mc = mc_rollout_cost(pred, x0, controls, spec, cfg.mc_samples, cfg.seed);
      for (InferenceMethod method : {InferenceMethod::kExactMoments, InferenceMethod::kLinearized}) {
        const SSGPBeliefDynamics dyn(pred, method, n);
        const double pc = trajectory_cost(rollout(dyn, x0, controls), spec);
        const double err = std::abs(pc - mc) / std::max(std::abs(mc), 1e-300);
        const double time = method == InferenceMethod::kExactMoments ? t_emm : t_lin;
        t.rows.push_back({to_string(method), std::to_string(r), std::to_string(n), std::to_string(m), "0.05",
                          format_double(err), format_double(time)});
      }

      // Degenerate input: both schemes must reduce to the point prediction.
      const JointInput point{joint.mu, MatrixXd::Zero(dim, dim)};
      const PointPrediction pp = predict_point(pred, point.mu);
      for (InferenceMethod method : {InferenceMethod::kExactMoments, InferenceMethod::kLinearized}) {
        const OutputMoments mom = compute_moments(pred, point, method);
        const double err = std::max((mom.mu_f - pp.mean).cwiseAbs().maxCoeff(),
                                    (mom.sigma_f.diagonal() - pp.variance).cwiseAbs().maxCoeff());
        const double time = method == InferenceMethod::kExactMoments ? t_emm : t_lin;
        t.rows.push_back({to_string(method), std::to_string(r), std::to_string(n), std::to_string(m), "0",
                          format_double(err), format_double(time)});
      }
    }
  }
  write_table(out / "bench_inference.csv", t);
  write_json(out / "bench_metadata.json", run_metadata("bench-inference", cfg));
}

void cmd_optimize(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const PlantSpec plant = make_plant(cfg.plant);
  const SSGPModel model = load_model(model_path(cfg, out));
  if (model.output_dim() != plant.n || model.input_dim != plant.n + plant.m)
    throw ConfigError("model dimensions do not match plant '" + cfg.plant + "'");
  const MpcOptions opts = mpc_options_from_config(cfg);
  const CostSpec spec = shifted_spec(cost_from_config(cfg), task_from_config(cfg, plant), 0);
  const SSGPBeliefDynamics dyn(model, opts.method);
  const std::vector<VectorXd> init(static_cast<std::size_t>(cfg.horizon - 1), plant.u_nominal);
  const auto t0 = std::chrono::steady_clock::now();
  const TrajOptResult res = optimize(dyn, Belief::point(cfg.x0), init, spec, opts.solver);
  const double elapsed = seconds_since(t0);
  if (!std::isfinite(res.cost)) throw std::runtime_error("optimize: non-finite cost");
  write_table(out / "trajectory.csv", trajectory_table(res.trajectory(), spec));
  write_json(out / "optimize_result.json",
             json{{"cost", res.cost}, {"iterations", res.iterations}, {"converged", res.converged},
                  {"cost_history", res.cost_history}, {"seconds", elapsed}});
  write_json(out / "optimize_metadata.json", run_metadata("optimize", cfg));
}

void cmd_mpc(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const PlantSpec plant = make_plant(cfg.plant);
  const SSGPModel model = load_model(model_path(cfg, out));
  if (model.output_dim() != plant.n || model.input_dim != plant.n + plant.m)
    throw ConfigError("model dimensions do not match plant '" + cfg.plant + "'");
  const MpcOptions opts = mpc_options_from_config(cfg);
  const CostSpec spec = cost_from_config(cfg);
  const TaskSchedule task = task_from_config(cfg, plant);
  const std::size_t tail = static_cast<std::size_t>(std::min<Index>(50, cfg.steps));

  std::vector<bool> modes{cfg.adapt};
  if (cfg.adapt) modes.push_back(false);
  json episodes = json::array();
  for (Index s = 0; s < cfg.n_seeds; ++s) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
    json entry{{"seed", seed}};
    for (bool adapt_on : modes) {
      AdaptationConfig ac = adaptation_from_config(cfg);
      ac.adapt_enabled = adapt_on;
      const EpisodeLog log = run_episode(plant, task, spec, model, ac, opts, cfg.steps, seed, cfg.x0);
      const std::string tag = adapt_on ? "adapt" : "noadapt";
      const std::string file = "episode_" + std::to_string(seed) + "_" + tag + ".csv";
      write_table(out / file, episode_table(log, plant.n, plant.m));
      const std::size_t rows = log.rows.size();
      json e{{"csv", file}, {"steps", rows}, {"aborted", log.aborted}};
      if (rows >= tail && rows > 0) {
        e["head_cost"] = log.mean_stage_cost(0, tail);
        e["tail_cost"] = log.mean_stage_cost(rows - tail, tail);
      }
      if (log.aborted) e["abort_reason"] = log.abort_reason;
      entry[tag] = e;
    }
    if (entry.contains("adapt") && entry.contains("noadapt") && entry["adapt"].contains("tail_cost") &&
        entry["noadapt"].contains("tail_cost"))
      entry["tail_cost_delta"] = entry["adapt"]["tail_cost"].get<double>() - entry["noadapt"]["tail_cost"].get<double>();
    episodes.push_back(entry);
  }
  write_json(out / "mpc_summary.json", json{{"tail_window", tail}, {"episodes", episodes}});
  write_json(out / "mpc_metadata.json", run_metadata("mpc", cfg));
}

}  // namespace aptraj
