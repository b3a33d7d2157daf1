#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "aptraj/cost.hpp"
#include "aptraj/ddp.hpp"
#include "aptraj/mpc.hpp"

namespace aptraj {

/// Shortest round-trip decimal representation, independent of the locale.
std::string format_double(double v);
double parse_double(const std::string& s);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& os, const CsvTable& t);
CsvTable read_csv(std::istream& is);

/// Columns k, mu_1..mu_n, s_i_j (vech order), u_1..u_m, stage_cost. The final
/// row holds the terminal belief with empty control cells and the terminal cost.
CsvTable trajectory_table(const Trajectory& traj, const CostSpec& spec);
Trajectory trajectory_from_table(const CsvTable& t, Index n, Index m);

/// Columns k, x_*, u_*, stage_cost, pred_mu_*, pred_s_*, iterations, wall_time, next_x_*, goal_*.
CsvTable episode_table(const EpisodeLog& log, Index n, Index m);
EpisodeLog episode_from_table(const CsvTable& t, Index n, Index m);

}  // namespace aptraj
