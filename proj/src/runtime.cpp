#include "gpcddp/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <stdexcept>

namespace gpcddp {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Eigen::VectorXd position_of(const Eigen::VectorXd& state, const std::vector<int>& dims) {
  Eigen::VectorXd z(dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a) z(static_cast<Eigen::Index>(a)) = state(dims[a]);
  return z;
}

int unit_mode(const BasisSet& basis, int dim) {
  for (int j = 0; j < basis.count(); ++j) {
    const MultiIndex& idx = basis.indices[j];
    if (total_degree(idx) == 1 && idx[dim] == 1) return j;
  }
  return -1;
}

}  // namespace

Eigen::VectorXd SolverSetup::lift(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = lift_state(x, terms());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int j = reset_modes.empty() ? -1 : reset_modes[static_cast<std::size_t>(i)];
    if (j > 0) out(i * terms() + j) = reset_std(i);
  }
  return out;
}

SolverSetup make_setup(const ScenarioConfig& config, bool deterministic) {
  SolverSetup s;
  s.deterministic = deterministic;
  auto physical = make_model(config.model, config.quadrotor);
  const int n = physical->state_dim();

  std::vector<UncertainParam> params;
  std::vector<PolyFamily> families;
  for (const auto& p : config.params) {
    if (!deterministic && p.spread > 0.0) {
      params.push_back(expand_param(p.name, p.family, p.mean, p.spread, static_cast<int>(families.size())));
      families.push_back(p.family);
    } else {
      params.push_back(expand_param(p.name, p.family, p.mean, 0.0, -1));
    }
  }
  std::vector<int> reset_dims(static_cast<std::size_t>(n), -1);
  s.reset_std = config.reset_std.size() == n ? config.reset_std : Eigen::VectorXd::Zero(n);
  if (!deterministic) {
    for (int i = 0; i < n; ++i) {
      if (s.reset_std(i) > 0.0) {
        reset_dims[static_cast<std::size_t>(i)] = static_cast<int>(families.size());
        families.push_back(PolyFamily::HermiteProbabilists);
      }
    }
  } else {
    s.reset_std.setZero();
  }
  const bool certain = deterministic || families.empty();
  if (families.empty()) families.push_back(PolyFamily::HermiteProbabilists);

  const int order = certain ? 0 : config.order;
  const int nodes = certain ? 1 : config.nodes_per_dim();
  BasisSet basis = build_basis(families, order);
  QuadratureRule quad = tensor_gauss_rule(families, nodes);
  s.model = std::make_shared<GpcModel>(physical, std::move(basis), std::move(quad), std::move(params));
  s.dynamics = std::make_shared<GpcEulerDynamics>(s.model, config.dt);

  s.reset_modes.assign(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i)
    if (reset_dims[static_cast<std::size_t>(i)] >= 0)
      s.reset_modes[static_cast<std::size_t>(i)] = unit_mode(s.model->basis(), reset_dims[static_cast<std::size_t>(i)]);

  s.position_dims = config.chance.position_dims;
  s.sampler = std::make_shared<ChanceSampler>(s.model->basis(), config.chance);

  const Eigen::VectorXd& norms = s.model->basis().norms;
  s.cost.state_weight = expected_state_weight(config.cost.state, config.cost.moments, norms);
  s.cost.terminal_weight = expected_state_weight(config.cost.terminal_state, config.cost.terminal_moments, norms);
  s.cost.control_weight = config.cost.control.asDiagonal();
  s.cost.targets = {lift_state(config.target_state, s.model->terms())};

  s.obstacles = config.obstacles;
  s.limits = config.limits;
  s.ddp = config.solver;
  s.al = config.al;
  return s;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t episode_seed(std::uint64_t base, int index) {
  return splitmix64(splitmix64(base) + static_cast<std::uint64_t>(index));
}

// ---------------------------------------------------------------------------

PlantSim::PlantSim(std::shared_ptr<const DynamicsModel> model, Eigen::VectorXd true_params, Eigen::VectorXd x0,
                   double dt)
    : model_(std::move(model)), params_(std::move(true_params)), state_(std::move(x0)), dt_(dt) {
  if (!model_) throw std::invalid_argument("PlantSim: null model");
  if (params_.size() != model_->param_dim()) throw std::invalid_argument("PlantSim: parameter count mismatch");
  if (state_.size() != model_->state_dim()) throw std::invalid_argument("PlantSim: state size mismatch");
  history_.push_back(state_);
}

Eigen::VectorXd PlantSim::sample_params(const ScenarioConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Eigen::VectorXd zeta(config.params.size());
  for (std::size_t i = 0; i < config.params.size(); ++i) {
    const auto& p = config.params[i];
    double xi = 0.0;
    switch (p.family) {
      case PolyFamily::HermiteProbabilists: xi = normal(rng); break;
      case PolyFamily::LegendreUniform: xi = uniform(rng); break;
      default: throw std::invalid_argument("PlantSim: unsupported parameter family");
    }
    zeta(static_cast<Eigen::Index>(i)) = p.mean + p.spread * xi;
  }
  return zeta;
}

void PlantSim::apply(const Eigen::VectorXd& u) {
  state_ = euler_step([this](const auto& x, const auto& uu) { return model_->f(x, uu, params_); }, state_, u, dt_);
  history_.push_back(state_);
}

// ---------------------------------------------------------------------------

MpcController::MpcController(const SolverSetup& setup, const ScenarioConfig& config)
    : setup_(setup),
      steps_(config.steps),
      prediction_(config.prediction),
      last_control_(setup.limits.clamp(config.initial_control)) {}

MpcStepLog MpcController::step(const Eigen::VectorXd& measured, int k) {
  if (k < 0 || k >= steps_) throw std::out_of_range("MpcController::step: step outside the episode");
  const int h = std::min(prediction_, steps_ - k);

  if (warm_controls_.empty()) warm_controls_.assign(static_cast<std::size_t>(h), last_control_);
  while (static_cast<int>(warm_controls_.size()) > h) warm_controls_.pop_back();
  while (static_cast<int>(warm_controls_.size()) < h) warm_controls_.push_back(warm_controls_.back());
  const ALState* warm = nullptr;
  if (warm_al_) {
    if (warm_al_->horizon() > h) {
      warm_al_->lambdas.conservativeResize(Eigen::NoChange, h);
      warm_al_->penalties.conservativeResize(Eigen::NoChange, h);
    }
    warm = &*warm_al_;
  }

  MpcStepLog log;
  log.step = k;
  log.horizon = h;
  log.measured = measured;
  const Eigen::VectorXd x0 = setup_.lift(measured);
  log.lifted_cov_trace = position_covariance(x0, setup_.basis(), setup_.position_dims).trace();

  ConstrainedProblem problem;
  problem.dynamics = setup_.dynamics.get();
  problem.cost = &setup_.cost;
  problem.x0 = x0;
  problem.obstacles = setup_.obstacles;
  problem.sampler = setup_.sampler.get();
  problem.limits = setup_.limits;
  ConstrainedResult res = solve_constrained(problem, warm_controls_, setup_.al, setup_.ddp, warm);

  const Trajectory& traj = res.trajectory;
  bool usable = traj.horizon() == h && static_cast<int>(traj.states.size()) == h + 1;
  if (usable)
    for (const auto& x : traj.states) usable = usable && x.allFinite();

  log.outer_iterations = res.outer_iterations;
  log.inner_iterations = res.inner_iterations;
  log.max_violation = res.max_violation;
  log.converged = res.converged;
  log.message = res.message;
  if (usable) {
    log.control = setup_.limits.clamp(traj.controls.front());
    const Eigen::VectorXd& x1 = traj.states[1];
    log.predicted_mean = setup_.model->mean_of(x1);
    log.predicted_cov = position_covariance(x1, setup_.basis(), setup_.position_dims);
    log.scaling = res.scaling.size() > 1 ? res.scaling[1] : 0.0;
    log.constraints = res.constraint_values.cols() > 0 ? Eigen::VectorXd(res.constraint_values.col(0))
                                                       : Eigen::VectorXd::Zero(0);
    warm_controls_.assign(traj.controls.begin() + 1, traj.controls.end());
    warm_controls_.push_back(traj.controls.back());
    warm_al_ = res.al.shifted();
  } else {
    log.fallback = true;
    log.control = last_control_;
    log.predicted_mean = measured;
    log.predicted_cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(setup_.position_dims.size()),
                                              static_cast<Eigen::Index>(setup_.position_dims.size()));
    log.constraints = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(setup_.obstacles.size()));
    if (warm_controls_.size() > 1) {
      warm_controls_.erase(warm_controls_.begin());
      warm_controls_.push_back(warm_controls_.back());
    }
  }
  last_control_ = log.control;
  return log;
}

MpcLog run_mpc(const ScenarioConfig& config, const SolverSetup& setup, std::uint64_t plant_seed) {
  PlantSim plant(setup.model->dynamics_ptr(), PlantSim::sample_params(config, plant_seed), config.initial_state,
                 config.dt);
  MpcController controller(setup, config);
  MpcLog log;
  log.true_params = plant.true_params();
  for (int k = 0; k < config.steps; ++k) {
    MpcStepLog entry = controller.step(plant.measure(), k);
    plant.apply(entry.control);
    log.fallbacks += entry.fallback ? 1 : 0;
    log.unconverged += entry.converged ? 0 : 1;
    log.steps.push_back(std::move(entry));
  }
  log.plant_states = plant.history();
  return log;
}

OpenLoopResult run_open_loop(const ScenarioConfig& config, const SolverSetup& setup) {
  const auto start = std::chrono::steady_clock::now();
  OpenLoopResult out;
  ConstrainedProblem problem;
  problem.dynamics = setup.dynamics.get();
  problem.cost = &setup.cost;
  problem.x0 = setup.lift(config.initial_state);
  problem.obstacles = setup.obstacles;
  problem.sampler = setup.sampler.get();
  problem.limits = setup.limits;
  std::vector<Eigen::VectorXd> controls(static_cast<std::size_t>(config.steps), setup.limits.clamp(config.initial_control));
  out.solve = solve_constrained(problem, std::move(controls), setup.al, setup.ddp);

  const auto& states = out.solve.trajectory.states;
  for (const auto& x : states) {
    out.position_cov.push_back(position_covariance(x, setup.basis(), setup.position_dims));
    out.scaling.push_back(setup.sampler->scaling_factor(x).value);
  }
  out.constraints = evaluate_constraints(states, setup.basis(), setup.obstacles, out.scaling, setup.position_dims);
  out.wall_seconds = seconds_since(start);
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(McMode mode) {
  switch (mode) {
    case McMode::OpenLoopGpc: return "open_loop_gpc";
    case McMode::MpcGpc: return "mpc_gpc";
    case McMode::MpcDeterministic: return "mpc_deterministic";
  }
  return "unknown";
}

McMode parse_mode(const std::string& name) {
  if (name == "open_loop_gpc") return McMode::OpenLoopGpc;
  if (name == "mpc_gpc") return McMode::MpcGpc;
  if (name == "mpc_deterministic") return McMode::MpcDeterministic;
  throw std::invalid_argument("unknown mode '" + name + "' (expected open_loop_gpc, mpc_gpc or mpc_deterministic)");
}

bool in_collision(const Eigen::VectorXd& state, const std::vector<CircleObstacle>& obstacles,
                  const std::vector<int>& dims) {
  const Eigen::VectorXd z = position_of(state, dims);
  for (const auto& o : obstacles)
    if ((z - o.center).norm() < o.radius) return true;
  return false;
}

double target_error(const Eigen::VectorXd& state, const Eigen::VectorXd& target, const std::vector<int>& dims) {
  return (position_of(state, dims) - position_of(target, dims)).norm();
}

McReport monte_carlo(const ScenarioConfig& config, McMode mode, int realizations, std::uint64_t seed,
                     const EpisodeCallback& on_episode) {
  if (realizations < 1) throw std::invalid_argument("monte_carlo: need at least one realization");
  const auto start = std::chrono::steady_clock::now();
  const SolverSetup setup = make_setup(config, mode == McMode::MpcDeterministic);
  const auto& dims = config.chance.position_dims;

  std::vector<Eigen::VectorXd> open_loop_controls;
  if (mode == McMode::OpenLoopGpc) open_loop_controls = run_open_loop(config, setup).solve.trajectory.controls;

  McReport report;
  report.scenario = config.name;
  report.mode = mode;
  report.realizations = realizations;
  report.seed = seed;
  for (int e = 0; e < realizations; ++e) {
    EpisodeResult ep;
    ep.seed = episode_seed(seed, e);
    if (mode == McMode::OpenLoopGpc) {
      PlantSim plant(setup.model->dynamics_ptr(), PlantSim::sample_params(config, ep.seed), config.initial_state,
                     config.dt);
      for (const auto& u : open_loop_controls) plant.apply(u);
      ep.true_params = plant.true_params();
      ep.plant_states = plant.history();
    } else {
      MpcLog log = run_mpc(config, setup, ep.seed);
      ep.true_params = log.true_params;
      ep.plant_states = std::move(log.plant_states);
      ep.fallbacks = log.fallbacks;
      ep.unconverged = log.unconverged;
    }
    for (std::size_t k = 0; k < ep.plant_states.size(); ++k) {
      if (in_collision(ep.plant_states[k], config.obstacles, dims)) {
        ep.collision = true;
        ep.first_collision_step = static_cast<int>(k);
        break;
      }
    }
    ep.final_error = target_error(ep.plant_states.back(), config.target_state, dims);
    report.collision_free_count += ep.collision ? 0 : 1;
    report.episodes_with_fallback += ep.fallbacks > 0 ? 1 : 0;
    if (on_episode) on_episode(e, ep);
    report.episodes.push_back(std::move(ep));
  }

  double err_sum = 0.0;
  for (const auto& ep : report.episodes) {
    err_sum += ep.final_error;
    report.max_final_error = std::max(report.max_final_error, ep.final_error);
  }
  report.mean_final_error = err_sum / realizations;
  report.collision_free_rate = static_cast<double>(report.collision_free_count) / realizations;

  const std::size_t len = report.episodes.front().plant_states.size();
  const auto p = static_cast<Eigen::Index>(dims.size());
  for (std::size_t k = 0; k < len; ++k) {
    Eigen::MatrixXd z(realizations, p);
    for (int e = 0; e < realizations; ++e) z.row(e) = position_of(report.episodes[e].plant_states[k], dims).transpose();
    double trace = 0.0;
    if (realizations > 1) {
      const Eigen::MatrixXd centered = z.rowwise() - z.colwise().mean();
      trace = centered.squaredNorm() / (realizations - 1);
    }
    report.ensemble_cov_trace.push_back(trace);
  }
  report.wall_seconds = seconds_since(start);
  return report;
}

}  // namespace gpcddp
