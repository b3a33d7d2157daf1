#include "aptraj/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace aptraj {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

void write_csv(std::ostream& os, const CsvTable& t) {
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

CsvTable read_csv(std::istream& is) {
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != t.header.size()) throw std::runtime_error("read_csv: ragged row");
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

namespace {

std::vector<std::string> indexed(const std::string& prefix, Index count) {
  std::vector<std::string> out;
  for (Index i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

std::vector<std::string> vech_names(const std::string& prefix, Index n) {
  std::vector<std::string> out;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) out.push_back(prefix + std::to_string(i + 1) + "_" + std::to_string(j + 1));
  return out;
}

void append(std::vector<std::string>& dst, const std::vector<std::string>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

void append(std::vector<std::string>& dst, const VectorXd& v) {
  for (Index i = 0; i < v.size(); ++i) dst.push_back(format_double(v(i)));
}

VectorXd take(const std::vector<std::string>& row, std::size_t& pos, Index count) {
  VectorXd v(count);
  for (Index i = 0; i < count; ++i) v(i) = parse_double(row.at(pos++));
  return v;
}

}  // namespace

CsvTable trajectory_table(const Trajectory& traj, const CostSpec& spec) {
  const Index h = traj.horizon();
  if (h < 1) throw std::invalid_argument("trajectory_table: empty trajectory");
  const Index n = traj.beliefs[0].dim();
  const Index m = spec.control_dim();
  CsvTable t;
  t.header = {"k"};
  append(t.header, indexed("mu_", n));
  append(t.header, vech_names("s_", n));
  append(t.header, indexed("u_", m));
  t.header.push_back("stage_cost");
  for (Index k = 0; k < h; ++k) {
    std::vector<std::string> r{std::to_string(k)};
    append(r, traj.beliefs[k].mu);
    append(r, vech(traj.beliefs[k].sigma));
    if (k + 1 < h) {
      append(r, traj.controls[k]);
      r.push_back(format_double(stage_cost_value(traj.beliefs[k], traj.controls[k], spec, k)));
    } else {
      for (Index j = 0; j < m; ++j) r.emplace_back();
      r.push_back(format_double(terminal_cost_value(traj.beliefs[k], spec, k)));
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

Trajectory trajectory_from_table(const CsvTable& t, Index n, Index m) {
  Trajectory traj;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    std::size_t pos = 1;
    Belief b;
    b.mu = take(row, pos, n);
    b.sigma = unvech(take(row, pos, vech_size(n)), n);
    traj.beliefs.push_back(std::move(b));
    if (i + 1 < t.rows.size()) traj.controls.push_back(take(row, pos, m));
  }
  return traj;
}

CsvTable episode_table(const EpisodeLog& log, Index n, Index m) {
  CsvTable t;
  t.header = {"k"};
  append(t.header, indexed("x_", n));
  append(t.header, indexed("u_", m));
  t.header.push_back("stage_cost");
  append(t.header, indexed("pred_mu_", n));
  append(t.header, vech_names("pred_s_", n));
  t.header.push_back("iterations");
  t.header.push_back("wall_time");
  append(t.header, indexed("next_x_", n));
  append(t.header, indexed("goal_", n));
  for (const EpisodeRow& e : log.rows) {
    std::vector<std::string> r{std::to_string(e.k)};
    append(r, e.state);
    append(r, e.control);
    r.push_back(format_double(e.stage_cost));
    append(r, e.predicted.mu);
    append(r, vech(e.predicted.sigma));
    r.push_back(std::to_string(e.iterations));
    r.push_back(format_double(e.wall_time));
    append(r, e.next_state);
    append(r, e.goal);
    t.rows.push_back(std::move(r));
  }
  return t;
}

EpisodeLog episode_from_table(const CsvTable& t, Index n, Index m) {
  EpisodeLog log;
  for (const auto& row : t.rows) {
    EpisodeRow e;
    std::size_t pos = 0;
    e.k = std::stoll(row.at(pos++));
    e.state = take(row, pos, n);
    e.control = take(row, pos, m);
    e.stage_cost = parse_double(row.at(pos++));
    e.predicted.mu = take(row, pos, n);
    e.predicted.sigma = unvech(take(row, pos, vech_size(n)), n);
    e.iterations = std::stoi(row.at(pos++));
    e.wall_time = parse_double(row.at(pos++));
    e.next_state = take(row, pos, n);
    e.goal = take(row, pos, n);
    log.rows.push_back(std::move(e));
  }
  return log;
}

}  // namespace aptraj
