// Command line front end: solve, mpc, mc, validate, export-plot.

#include "gpcddp/export.hpp"
#include "gpcddp/runtime.hpp"
#include "gpcddp/scenario.hpp"
#include "gpcddp/validate.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace gpcddp;

namespace {

constexpr int kOk = 0;
constexpr int kSolverFailure = 1;
constexpr int kConfigError = 2;

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string mode = "mpc_gpc";
  int realizations = 100;
  bool quiet = false;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

template <typename Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  fn(os);
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

int cmd_solve(const Args& a) {
  const ScenarioConfig cfg = load_scenario(a.config);
  const fs::path out = prepare_out(a.out);
  const SolverSetup setup = make_setup(cfg, a.mode == "mpc_deterministic" || a.mode == "deterministic");
  const OpenLoopResult res = run_open_loop(cfg, setup);
  write_stream(out / "trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, cfg, setup, res.solve.trajectory); });
  write_stream(out / "covariance.csv", [&](std::ostream& os) { write_covariance_csv(os, cfg, res); });
  write_file(out / "summary.json", solve_summary_json(cfg, res));
  write_file(out / "timing.json", timing_json(res.wall_seconds));
  write_file(out / "config.json", scenario_to_json(cfg) + "\n");
  std::printf("%s: %s, cost %.6g, outer %d, inner %d, max violation %.3g, %.2f s\n", cfg.name.c_str(),
              res.solve.message.c_str(), res.solve.cost, res.solve.outer_iterations, res.solve.inner_iterations,
              res.solve.max_violation, res.wall_seconds);
  return res.solve.converged ? kOk : kSolverFailure;
}

int cmd_mpc(const Args& a) {
  const ScenarioConfig cfg = load_scenario(a.config);
  const fs::path out = prepare_out(a.out);
  const std::uint64_t seed = a.seed.value_or(cfg.plant_seed);
  const auto start = std::chrono::steady_clock::now();
  const SolverSetup setup = make_setup(cfg, a.mode == "mpc_deterministic");
  const MpcLog log = run_mpc(cfg, setup, seed);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_stream(out / "mpc.csv", [&](std::ostream& os) { write_mpc_csv(os, cfg, log); });
  write_file(out / "summary.json", mpc_summary_json(cfg, log, seed));
  write_file(out / "timing.json", timing_json(wall));
  write_file(out / "config.json", scenario_to_json(cfg) + "\n");
  std::printf("%s: final error %.4f m, fallbacks %d, unconverged cycles %d, %.2f s\n", cfg.name.c_str(),
              target_error(log.plant_states.back(), cfg.target_state, cfg.chance.position_dims), log.fallbacks,
              log.unconverged, wall);
  return log.fallbacks == 0 ? kOk : kSolverFailure;
}

int cmd_mc(const Args& a) {
  const ScenarioConfig cfg = load_scenario(a.config);
  const McMode mode = parse_mode(a.mode);
  const fs::path out = prepare_out(a.out);
  const std::uint64_t seed = a.seed.value_or(cfg.monte_carlo_seed);
  const bool quiet = a.quiet;
  const McReport rep = monte_carlo(cfg, mode, a.realizations, seed, [quiet](int i, const EpisodeResult& e) {
    if (!quiet)
      std::fprintf(stderr, "episode %d: %s, final error %.4f\n", i, e.collision ? "collision" : "clear",
                   e.final_error);
  });
  write_file(out / "report.json", mc_report_json(rep));
  write_file(out / "timing.json", timing_json(rep.wall_seconds));
  std::printf("%s %s: %d/%d collision free, mean final error %.4f m, %.1f s\n", cfg.name.c_str(),
              to_string(mode).c_str(), rep.collision_free_count, rep.realizations, rep.mean_final_error,
              rep.wall_seconds);
  return kOk;
}

int cmd_validate(const Args& a) {
  bool all = true;
  for (const auto& r : run_validation(a.seed.value_or(1))) {
    std::printf("%-48s %s  error %.3e  tol %.1e\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.error,
                r.tolerance);
    all = all && r.passed;
  }
  return all ? kOk : kSolverFailure;
}

int cmd_export_plot(const Args& a) {
  const ScenarioConfig cfg = load_scenario(a.config);
  const fs::path out = prepare_out(a.out);
  const SolverSetup setup = make_setup(cfg);
  const OpenLoopResult res = run_open_loop(cfg, setup);
  write_stream(out / "plot.csv", [&](std::ostream& os) { write_plot_csv(os, cfg, res); });
  write_stream(out / "realizations.csv", [&](std::ostream& os) {
    write_realizations_csv(os, cfg, setup, res.solve.trajectory, a.realizations, a.seed.value_or(cfg.monte_carlo_seed));
  });
  std::printf("wrote %s and %s\n", (out / "plot.csv").string().c_str(), (out / "realizations.csv").string().c_str());
  return res.solve.failed && res.solve.trajectory.states.size() < 2 ? kSolverFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gPC chance-constrained DDP and receding-horizon control"};
  app.require_subcommand(1);
  Args args;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", args.config, "scenario JSON file");
    if (needs_config) opt->required();
    sub->add_option("--seed", args.seed, "random seed");
    sub->add_option("--out", args.out, "output directory");
  };
  auto* solve = app.add_subcommand("solve", "open-loop gPC CDDP over the full horizon");
  add_common(solve, true);
  solve->add_option("--mode", args.mode, "mpc_gpc (default) or mpc_deterministic for the mean-parameter model");
  auto* mpc = app.add_subcommand("mpc", "single receding-horizon episode");
  add_common(mpc, true);
  mpc->add_option("--mode", args.mode, "mpc_gpc or mpc_deterministic");
  auto* mc = app.add_subcommand("mc", "Monte Carlo campaign");
  add_common(mc, true);
  mc->add_option("--mode", args.mode, "open_loop_gpc, mpc_gpc or mpc_deterministic");
  mc->add_option("--realizations", args.realizations, "number of episodes")->check(CLI::PositiveNumber);
  mc->add_flag("--quiet", args.quiet, "no per-episode progress");
  auto* val = app.add_subcommand("validate", "run the built-in property checks");
  add_common(val, false);
  auto* plot = app.add_subcommand("export-plot", "per-step mean, ellipse and realization CSVs");
  add_common(plot, true);
  args.realizations = 100;
  plot->add_option("--realizations", args.realizations, "number of sampled realizations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*solve) return cmd_solve(args);
    if (*mpc) return cmd_mpc(args);
    if (*mc) return cmd_mc(args);
    if (*val) return cmd_validate(args);
    if (*plot) return cmd_export_plot(args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSolverFailure;
  }
  return kOk;
}
