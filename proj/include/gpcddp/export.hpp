#pragma once

// CSV and JSON writers for solver runs and campaigns. Numbers are printed with
// a fixed format so identical runs produce identical files.

#include "gpcddp/runtime.hpp"

#include <cstdint>
#include <ostream>
#include <string>

namespace gpcddp {

std::string format_number(double v);

/// step, time, mean_i, cov_i_j (upper triangle, all states), u_k.
void write_trajectory_csv(std::ostream& os, const ScenarioConfig& config, const SolverSetup& setup,
                          const Trajectory& traj);

/// step, time, position covariance (upper triangle), trace, lambda_max, s, inflation radius, g_i.
void write_covariance_csv(std::ostream& os, const ScenarioConfig& config, const OpenLoopResult& result);

/// Per MPC cycle: plant state, applied control, prediction and solver statistics.
void write_mpc_csv(std::ostream& os, const ScenarioConfig& config, const MpcLog& log);

/// Per-step mean position, covariance ellipse and over-approximating circle.
void write_plot_csv(std::ostream& os, const ScenarioConfig& config, const OpenLoopResult& result);

/// Sampled realizations of the predicted trajectory (xi drawn from `seed`).
void write_realizations_csv(std::ostream& os, const ScenarioConfig& config, const SolverSetup& setup,
                            const Trajectory& traj, int count, std::uint64_t seed);

std::string solve_summary_json(const ScenarioConfig& config, const OpenLoopResult& result);
std::string mpc_summary_json(const ScenarioConfig& config, const MpcLog& log, std::uint64_t seed);
std::string mc_report_json(const McReport& report);
std::string timing_json(double wall_seconds);

}  // namespace gpcddp
