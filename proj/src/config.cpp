#include "aptraj/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "aptraj/csv.hpp"
#include "aptraj/plants.hpp"

namespace aptraj {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (std::floor(d) != d || std::abs(d) > 9e15)
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  return static_cast<long long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::string join(const VectorXd& v) {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v(i));
  return s;
}

std::string join(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define APTRAJ_STR(name)                                                  \
  Field { #name, [](RunConfig& c, const std::string& v) { c.name = v; }, \
          [](const RunConfig& c) { return c.name; } }
#define APTRAJ_NUM(name)                                                                  \
  Field { #name, [](RunConfig& c, const std::string& v) { c.name = to_double(#name, v); }, \
          [](const RunConfig& c) { return format_double(c.name); } }
#define APTRAJ_INT(name)                                                                          \
  Field { #name,                                                                                  \
          [](RunConfig& c, const std::string& v) {                                                \
            c.name = static_cast<decltype(c.name)>(to_int(#name, v));                             \
          },                                                                                      \
          [](const RunConfig& c) { return std::to_string(c.name); } }
#define APTRAJ_BOOL(name)                                                               \
  Field { #name, [](RunConfig& c, const std::string& v) { c.name = to_bool(#name, v); }, \
          [](const RunConfig& c) { return std::string(c.name ? "true" : "false"); } }
#define APTRAJ_VEC(name)                                                 \
  Field { #name,                                                         \
          [](RunConfig& c, const std::string& v) {                       \
            const auto items = split(v);                                 \
            c.name.resize(static_cast<Index>(items.size()));             \
            for (std::size_t i = 0; i < items.size(); ++i)               \
              c.name(static_cast<Index>(i)) = to_double(#name, items[i]); \
          },                                                             \
          [](const RunConfig& c) { return join(c.name); } }
#define APTRAJ_IVEC(name)                                                            \
  Field { #name,                                                                     \
          [](RunConfig& c, const std::string& v) {                                   \
            c.name.clear();                                                          \
            for (const auto& item : split(v)) c.name.push_back(to_int(#name, item)); \
          },                                                                         \
          [](const RunConfig& c) { return join(c.name); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> f{
      APTRAJ_STR(plant),          APTRAJ_INT(n_offline),        APTRAJ_NUM(excitation),
      APTRAJ_INT(segment_length), APTRAJ_NUM(holdout_fraction), APTRAJ_INT(seed),
      APTRAJ_INT(r),              APTRAJ_BOOL(optimize_hyper),  APTRAJ_INT(hyper_iters),
      APTRAJ_STR(model_path),     APTRAJ_STR(method),           APTRAJ_INT(horizon),
      APTRAJ_INT(max_iters),      APTRAJ_INT(reopt_iters),      APTRAJ_NUM(tol),
      APTRAJ_BOOL(full_convergence), APTRAJ_BOOL(use_bounds),   APTRAJ_VEC(u_lo),
      APTRAJ_VEC(u_hi),           APTRAJ_VEC(q_diag),           APTRAJ_VEC(r_diag),
      APTRAJ_NUM(qf_scale),       APTRAJ_VEC(goal),             APTRAJ_VEC(x0),
      APTRAJ_NUM(lambda),         APTRAJ_BOOL(adapt),           APTRAJ_BOOL(readd_prior),
      APTRAJ_INT(steps),          APTRAJ_INT(n_seeds),          APTRAJ_STR(schedule_param),
      APTRAJ_NUM(mass_rate),      APTRAJ_INT(param_change_step), APTRAJ_NUM(param_change_factor),
      APTRAJ_NUM(target_radius),  APTRAJ_NUM(target_period),    APTRAJ_NUM(target_cx),
      APTRAJ_NUM(target_cz),      APTRAJ_IVEC(bench_r),         APTRAJ_IVEC(bench_state_dims),
      APTRAJ_INT(bench_control_dim), APTRAJ_INT(bench_horizon), APTRAJ_INT(mc_samples),
      APTRAJ_INT(bench_reps),
  };
  return f;
}

#undef APTRAJ_STR
#undef APTRAJ_NUM
#undef APTRAJ_INT
#undef APTRAJ_BOOL
#undef APTRAJ_VEC
#undef APTRAJ_IVEC

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void resolve_and_validate(RunConfig& c) {
  PlantSpec plant;
  try {
    plant = make_plant(c.plant);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const Index n = plant.n, m = plant.m;
  if (c.excitation < 0.0) c.excitation = plant.control_box ? 0.5 * (plant.control_box->hi - plant.control_box->lo).maxCoeff() : 1.0;
  if (c.u_lo.size() == 0 && plant.control_box) c.u_lo = plant.control_box->lo;
  if (c.u_hi.size() == 0 && plant.control_box) c.u_hi = plant.control_box->hi;
  if (c.q_diag.size() == 0) {
    switch (plant.kind) {
      case PlantKind::kPendulum: c.q_diag = vec({1.0, 0.1}); break;
      case PlantKind::kCartPole: c.q_diag = vec({1.0, 1.0, 0.1, 0.1}); break;
      case PlantKind::kPlanarQuadrotor: c.q_diag = vec({1.0, 1.0, 0.1, 0.1, 0.1, 0.01}); break;
    }
  }
  if (c.r_diag.size() == 0) c.r_diag = VectorXd::Constant(m, 0.01);
  if (c.goal.size() == 0) {
    c.goal = VectorXd::Zero(n);
    if (plant.kind == PlantKind::kPendulum) c.goal(0) = std::numbers::pi;
  }
  if (c.x0.size() == 0) {
    c.x0 = VectorXd::Zero(n);
    if (plant.kind == PlantKind::kPendulum) c.x0(0) = std::numbers::pi - 0.8;
    if (plant.kind == PlantKind::kCartPole) c.x0(1) = 0.2;
  }

  require(c.n_offline >= 1, "n_offline must be >= 1");
  require(c.segment_length >= 1, "segment_length must be >= 1");
  require(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0, "holdout_fraction must lie in [0, 1)");
  require(c.r >= 1, "r must be >= 1");
  require(c.hyper_iters >= 0, "hyper_iters must be >= 0");
  require(c.method == "emm" || c.method == "lin", "method must be emm or lin");
  require(c.horizon >= 2, "horizon must be >= 2");
  require(c.max_iters >= 1 && c.reopt_iters >= 1, "iteration budgets must be >= 1");
  require(c.tol > 0.0, "tol must be positive");
  require(c.lambda > 0.0 && c.lambda < 1.0, "lambda must lie in (0, 1)");
  require(c.steps >= 1 && c.n_seeds >= 1, "steps and n_seeds must be >= 1");
  require(c.q_diag.size() == n && (c.q_diag.array() >= 0.0).all(), "q_diag needs n nonnegative entries");
  require(c.r_diag.size() == m && (c.r_diag.array() > 0.0).all(), "r_diag needs m positive entries");
  require(c.qf_scale >= 0.0, "qf_scale must be >= 0");
  require(c.goal.size() == n && c.x0.size() == n, "goal and x0 need n entries");
  if (c.use_bounds) {
    require(c.u_lo.size() == m && c.u_hi.size() == m, "u_lo and u_hi need m entries");
    require((c.u_lo.array() < c.u_hi.array()).all(), "u_lo must be below u_hi");
  }
  if (c.mass_rate > 0.0 || c.param_change_step >= 0)
    require(plant.params.count(c.schedule_param) == 1, "schedule_param is not a parameter of the plant");
  require(c.mass_rate >= 0.0, "mass_rate must be >= 0");
  require(c.param_change_factor > 0.0, "param_change_factor must be positive");
  require(c.target_radius >= 0.0 && c.target_period > 0.0, "invalid circular target");
  require(!c.bench_r.empty() && !c.bench_state_dims.empty(), "bench lists must be nonempty");
  for (Index v : c.bench_r) require(v >= 1, "bench_r entries must be >= 1");
  for (Index v : c.bench_state_dims) require(v >= 1, "bench_state_dims entries must be >= 1");
  require(c.bench_control_dim >= 0 && c.bench_horizon >= 1, "invalid bench dimensions");
  require(c.mc_samples >= 2 && c.bench_reps >= 1, "mc_samples must be >= 2 and bench_reps >= 1");
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
    bool found = false;
    for (const Field& f : fields())
      if (key == f.key) {
        f.set(c, value);
        found = true;
        break;
      }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
  resolve_and_validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(cfg));
  return out;
}

}  // namespace aptraj
