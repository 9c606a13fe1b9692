#include "gpcddp/export.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <random>

namespace gpcddp {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v == 0.0 ? 0.0 : v);
  return buf;
}

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void put(std::ostream& os, double v) { os << ',' << format_number(v); }

std::string upper_name(const std::string& prefix, int a, int b) {
  return prefix + std::to_string(a) + "_" + std::to_string(b);
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const ScenarioConfig& config, const SolverSetup& setup,
                          const Trajectory& traj) {
  const int n = setup.model->physical_dim(), m = setup.model->control_dim();
  os << "step,time";
  for (int i = 0; i < n; ++i) os << ",mean_" << i;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) os << ',' << upper_name("cov_", i, j);
  for (int k = 0; k < m; ++k) os << ",u_" << k;
  os << '\n';
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const Eigen::VectorXd mu = setup.model->mean_of(traj.states[k]);
    const Eigen::MatrixXd cov = setup.model->covariance_of(traj.states[k]);
    os << k << ',' << format_number(static_cast<double>(k) * config.dt);
    for (int i = 0; i < n; ++i) put(os, mu(i));
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) put(os, cov(i, j));
    for (int c = 0; c < m; ++c) {
      if (k < traj.controls.size()) put(os, traj.controls[k](c));
      else os << ',';
    }
    os << '\n';
  }
}

void write_covariance_csv(std::ostream& os, const ScenarioConfig& config, const OpenLoopResult& result) {
  const auto& dims = config.chance.position_dims;
  const int p = static_cast<int>(dims.size());
  const int w = static_cast<int>(config.obstacles.size());
  os << "step,time";
  for (int a = 0; a < p; ++a)
    for (int b = a; b < p; ++b) os << ',' << upper_name("cov_", dims[a], dims[b]);
  os << ",trace,lambda_max,s,inflation";
  for (int i = 0; i < w; ++i) os << ",g_" << i;
  os << '\n';
  for (std::size_t k = 0; k < result.position_cov.size(); ++k) {
    const Eigen::MatrixXd& cov = result.position_cov[k];
    const double lmax = cov.trace() > 0.0 ? lambda_max_with_grad(cov).value : 0.0;
    const double s = result.scaling[k];
    os << k << ',' << format_number(static_cast<double>(k) * config.dt);
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) put(os, cov(a, b));
    put(os, cov.trace());
    put(os, lmax);
    put(os, s);
    put(os, std::sqrt(std::max(0.0, s * lmax)));
    for (int i = 0; i < w; ++i) {
      if (k >= 1 && static_cast<Eigen::Index>(k) <= result.constraints.cols()) put(os, result.constraints(i, k - 1));
      else os << ',';
    }
    os << '\n';
  }
}

void write_mpc_csv(std::ostream& os, const ScenarioConfig& config, const MpcLog& log) {
  const int n = config.state_dim(), m = config.control_dim();
  const auto& dims = config.chance.position_dims;
  const int w = static_cast<int>(config.obstacles.size());
  os << "step,time";
  for (int i = 0; i < n; ++i) os << ",x_" << i;
  for (int k = 0; k < m; ++k) os << ",u_" << k;
  for (int d : dims) os << ",pred_mean_" << d;
  os << ",pred_trace,s";
  for (int i = 0; i < w; ++i) os << ",g_" << i;
  os << ",horizon,outer_iterations,inner_iterations,max_violation,converged,fallback\n";
  for (std::size_t k = 0; k < log.plant_states.size(); ++k) {
    os << k << ',' << format_number(static_cast<double>(k) * config.dt);
    for (int i = 0; i < n; ++i) put(os, log.plant_states[k](i));
    if (k < log.steps.size()) {
      const MpcStepLog& e = log.steps[k];
      for (int c = 0; c < m; ++c) put(os, e.control(c));
      for (int d : dims) put(os, e.predicted_mean(d));
      put(os, e.predicted_cov.trace());
      put(os, e.scaling);
      for (int i = 0; i < w; ++i) {
        if (i < e.constraints.size()) put(os, e.constraints(i));
        else os << ',';
      }
      os << ',' << e.horizon << ',' << e.outer_iterations << ',' << e.inner_iterations;
      put(os, e.max_violation);
      os << ',' << (e.converged ? 1 : 0) << ',' << (e.fallback ? 1 : 0);
    } else {
      os << std::string(static_cast<std::size_t>(m + static_cast<int>(dims.size()) + 2 + w + 6), ',');
    }
    os << '\n';
  }
}

void write_plot_csv(std::ostream& os, const ScenarioConfig& config, const OpenLoopResult& result) {
  const auto& dims = config.chance.position_dims;
  const int p = static_cast<int>(dims.size());
  const auto& states = result.solve.trajectory.states;
  os << "step,time";
  for (int d : dims) os << ",mean_" << d;
  for (int a = 0; a < p; ++a)
    for (int b = a; b < p; ++b) os << ',' << upper_name("cov_", dims[a], dims[b]);
  os << ",s,lambda_max,circle_radius";
  if (p == 2) os << ",ellipse_major,ellipse_minor,ellipse_angle";
  os << '\n';
  for (std::size_t k = 0; k < states.size(); ++k) {
    const Eigen::MatrixXd& cov = result.position_cov[k];
    const double s = result.scaling[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
    const double lmax = ev.maxCoeff();
    os << k << ',' << format_number(static_cast<double>(k) * config.dt);
    for (int d : dims) put(os, states[k](d * (states[k].size() / config.state_dim())));
    for (int a = 0; a < p; ++a)
      for (int b = a; b < p; ++b) put(os, cov(a, b));
    put(os, s);
    put(os, lmax);
    put(os, std::sqrt(s * lmax));
    if (p == 2) {
      const Eigen::Vector2d v = eig.eigenvectors().col(1);
      put(os, std::sqrt(s * ev(1)));
      put(os, std::sqrt(s * ev(0)));
      put(os, lmax > 0.0 ? std::atan2(v(1), v(0)) : 0.0);
    }
    os << '\n';
  }
}

void write_realizations_csv(std::ostream& os, const ScenarioConfig& config, const SolverSetup& setup,
                            const Trajectory& traj, int count, std::uint64_t seed) {
  const auto& dims = config.chance.position_dims;
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd xi = sample_xi(setup.basis(), count, rng);
  os << "realization,step,time";
  for (int d : dims) os << ",x_" << d;
  os << '\n';
  for (int r = 0; r < count; ++r) {
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      const Eigen::VectorXd x = eval_realization(traj.states[k], setup.basis(), xi.row(r).transpose());
      os << r << ',' << k << ',' << format_number(static_cast<double>(k) * config.dt);
      for (int d : dims) put(os, x(d));
      os << '\n';
    }
  }
}

std::string solve_summary_json(const ScenarioConfig& config, const OpenLoopResult& result) {
  const ConstrainedResult& s = result.solve;
  const auto& dims = config.chance.position_dims;
  json doc;
  doc["scenario"] = config.name;
  doc["converged"] = s.converged;
  doc["failed"] = s.failed;
  doc["message"] = s.message;
  doc["cost"] = s.cost;
  doc["outer_iterations"] = s.outer_iterations;
  doc["inner_iterations"] = s.inner_iterations;
  doc["max_violation"] = s.max_violation;
  doc["violation_history"] = s.violation_history;
  const int terms = static_cast<int>(s.trajectory.states.back().size()) / config.state_dim();
  const Eigen::VectorXd final_mean = mean(s.trajectory.states.back(), terms);
  doc["final_mean"] = vec_json(final_mean);
  doc["final_target_error"] = target_error(final_mean, config.target_state, dims);
  std::vector<double> traces;
  for (const auto& c : result.position_cov) traces.push_back(c.trace());
  doc["position_cov_trace"] = traces;
  doc["scaling"] = result.scaling;
  return doc.dump(2) + "\n";
}

std::string mpc_summary_json(const ScenarioConfig& config, const MpcLog& log, std::uint64_t seed) {
  const auto& dims = config.chance.position_dims;
  json doc;
  doc["scenario"] = config.name;
  doc["seed"] = seed;
  doc["true_params"] = vec_json(log.true_params);
  doc["steps"] = static_cast<int>(log.steps.size());
  doc["fallbacks"] = log.fallbacks;
  doc["unconverged_cycles"] = log.unconverged;
  bool collision = false;
  for (const auto& x : log.plant_states) collision = collision || in_collision(x, config.obstacles, dims);
  doc["collision"] = collision;
  doc["final_state"] = vec_json(log.plant_states.back());
  doc["final_target_error"] = target_error(log.plant_states.back(), config.target_state, dims);
  int outer = 0, inner = 0;
  double worst = 0.0;
  for (const auto& e : log.steps) {
    outer += e.outer_iterations;
    inner += e.inner_iterations;
    worst = std::max(worst, e.max_violation);
  }
  doc["outer_iterations"] = outer;
  doc["inner_iterations"] = inner;
  doc["max_violation"] = worst;
  return doc.dump(2) + "\n";
}

std::string mc_report_json(const McReport& report) {
  json doc;
  doc["scenario"] = report.scenario;
  doc["mode"] = to_string(report.mode);
  doc["realizations"] = report.realizations;
  doc["seed"] = report.seed;
  doc["collision_free_count"] = report.collision_free_count;
  doc["collision_free_rate"] = report.collision_free_rate;
  doc["mean_final_error"] = report.mean_final_error;
  doc["max_final_error"] = report.max_final_error;
  doc["episodes_with_fallback"] = report.episodes_with_fallback;
  doc["ensemble_cov_trace"] = report.ensemble_cov_trace;
  json eps = json::array();
  for (const auto& e : report.episodes) {
    eps.push_back({{"seed", e.seed},
                   {"true_params", vec_json(e.true_params)},
                   {"collision", e.collision},
                   {"first_collision_step", e.first_collision_step},
                   {"final_error", e.final_error},
                   {"fallbacks", e.fallbacks},
                   {"unconverged_cycles", e.unconverged}});
  }
  doc["episodes"] = eps;
  return doc.dump(2) + "\n";
}

std::string timing_json(double wall_seconds) {
  json doc;
  doc["wall_seconds"] = wall_seconds;
  return doc.dump(2) + "\n";
}

}  // namespace gpcddp
