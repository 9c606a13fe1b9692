#pragma once

// Receding-horizon execution against a simulated plant and Monte Carlo campaigns.

#include "gpcddp/constraints.hpp"
#include "gpcddp/gpc.hpp"
#include "gpcddp/scenario.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gpcddp {

/// Everything the solver needs for one scenario. In deterministic mode the
/// model uses mean parameters, a single constant basis term and no inflation.
struct SolverSetup {
  std::shared_ptr<const GpcModel> model;
  std::shared_ptr<const GpcEulerDynamics> dynamics;
  std::shared_ptr<const ChanceSampler> sampler;
  QuadraticCost cost;
  std::vector<CircleObstacle> obstacles;
  BoxLimits limits;
  DdpOptions ddp;
  AlOptions al;
  std::vector<int> position_dims;
  Eigen::VectorXd reset_std;       // per physical state
  std::vector<int> reset_modes;    // basis index of the reset mode per state, -1 if none
  bool deterministic = false;

  const BasisSet& basis() const { return model->basis(); }
  int terms() const { return model->terms(); }

  /// Mean <- x, higher coefficients zero except the optional reset spread.
  Eigen::VectorXd lift(const Eigen::VectorXd& x) const;
};

SolverSetup make_setup(const ScenarioConfig& config, bool deterministic = false);

std::uint64_t splitmix64(std::uint64_t x);
/// Seed of episode `index` in a campaign with base seed `base`.
std::uint64_t episode_seed(std::uint64_t base, int index);

/// Simulated real system. The true parameters are fixed at construction and
/// only the measured state is visible to callers.
class PlantSim {
 public:
  PlantSim(std::shared_ptr<const DynamicsModel> model, Eigen::VectorXd true_params, Eigen::VectorXd x0, double dt);

  /// Draws zeta* from the scenario's parameter distributions.
  static Eigen::VectorXd sample_params(const ScenarioConfig& config, std::uint64_t seed);

  const Eigen::VectorXd& measure() const { return state_; }
  const std::vector<Eigen::VectorXd>& history() const { return history_; }
  const Eigen::VectorXd& true_params() const { return params_; }
  void apply(const Eigen::VectorXd& u);

 private:
  std::shared_ptr<const DynamicsModel> model_;
  Eigen::VectorXd params_;
  Eigen::VectorXd state_;
  double dt_;
  std::vector<Eigen::VectorXd> history_;
};

struct MpcStepLog {
  int step = 0;
  int horizon = 0;
  Eigen::VectorXd measured;         // plant state at cycle start
  Eigen::VectorXd control;          // applied control
  Eigen::VectorXd predicted_mean;   // predicted X_1 mean (physical)
  Eigen::MatrixXd predicted_cov;    // predicted X_1 position covariance
  double scaling = 0.0;             // s(p) at X_1
  Eigen::VectorXd constraints;      // G per obstacle at X_1
  double lifted_cov_trace = 0.0;    // position covariance trace of the lifted state
  int outer_iterations = 0;
  int inner_iterations = 0;
  double max_violation = 0.0;
  bool converged = false;
  bool fallback = false;
  std::string message;
};

struct MpcLog {
  std::vector<MpcStepLog> steps;
  std::vector<Eigen::VectorXd> plant_states;  // N + 1
  Eigen::VectorXd true_params;
  int fallbacks = 0;
  int unconverged = 0;
};

/// Warm-started receding-horizon controller. Sees only measured states.
class MpcController {
 public:
  MpcController(const SolverSetup& setup, const ScenarioConfig& config);

  /// One cycle at time step k: lift, solve over min(H, N - k) steps, shift.
  MpcStepLog step(const Eigen::VectorXd& measured, int k);

  const std::vector<Eigen::VectorXd>& warm_controls() const { return warm_controls_; }

 private:
  const SolverSetup& setup_;
  int steps_;
  int prediction_;
  std::vector<Eigen::VectorXd> warm_controls_;
  std::optional<ALState> warm_al_;
  Eigen::VectorXd last_control_;
};

MpcLog run_mpc(const ScenarioConfig& config, const SolverSetup& setup, std::uint64_t plant_seed);

struct OpenLoopResult {
  ConstrainedResult solve;
  std::vector<Eigen::MatrixXd> position_cov;  // per state 0..N
  std::vector<double> scaling;                // per state 0..N
  Eigen::MatrixXd constraints;                // w x N
  double wall_seconds = 0.0;
};

OpenLoopResult run_open_loop(const ScenarioConfig& config, const SolverSetup& setup);

enum class McMode { OpenLoopGpc, MpcGpc, MpcDeterministic };
std::string to_string(McMode mode);
McMode parse_mode(const std::string& name);

struct EpisodeResult {
  std::uint64_t seed = 0;
  Eigen::VectorXd true_params;
  bool collision = false;
  int first_collision_step = -1;
  double final_error = 0.0;
  int fallbacks = 0;
  int unconverged = 0;
  std::vector<Eigen::VectorXd> plant_states;
};

struct McReport {
  std::string scenario;
  McMode mode = McMode::MpcGpc;
  int realizations = 0;
  std::uint64_t seed = 0;
  int collision_free_count = 0;
  double collision_free_rate = 0.0;
  double mean_final_error = 0.0;
  double max_final_error = 0.0;
  int episodes_with_fallback = 0;
  std::vector<EpisodeResult> episodes;
  std::vector<double> ensemble_cov_trace;  // trace of plant position covariance per step
  double wall_seconds = 0.0;
};

/// Progress hook called after every finished episode.
using EpisodeCallback = std::function<void(int index, const EpisodeResult&)>;

McReport monte_carlo(const ScenarioConfig& config, McMode mode, int realizations, std::uint64_t seed,
                     const EpisodeCallback& on_episode = {});

/// Smallest distance from the position to any obstacle surface is negative.
bool in_collision(const Eigen::VectorXd& state, const std::vector<CircleObstacle>& obstacles,
                  const std::vector<int>& dims);
double target_error(const Eigen::VectorXd& state, const Eigen::VectorXd& target, const std::vector<int>& dims);

}  // namespace gpcddp
