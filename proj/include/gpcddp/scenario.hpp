#pragma once

// JSON scenario configuration. See docs/scenario_schema.md for the schema.

#include "gpcddp/constraints.hpp"
#include "gpcddp/ddp.hpp"
#include "gpcddp/models.hpp"
#include "gpcddp/orthopoly.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpcddp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParamSpec {
  std::string name;
  PolyFamily family = PolyFamily::HermiteProbabilists;
  double mean = 0.0;
  double spread = 0.0;  // sigma for Gaussian, half-width for uniform
};

struct CostSpec {
  Eigen::VectorXd state;             // mean weights, diag(A)
  Eigen::VectorXd moments;           // a_ij for j >= 1, one value per state
  Eigen::VectorXd control;           // diag(R)
  Eigen::VectorXd terminal_state;    // diag(A_f)
  Eigen::VectorXd terminal_moments;  // terminal a_ij
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string model = "unicycle";
  QuadrotorConstants quadrotor;
  std::vector<ParamSpec> params;  // model parameter order

  int order = 2;
  int quadrature_nodes = 0;  // 0 selects order + 2

  int steps = 60;       // N
  int prediction = 10;  // H
  double dt = 0.02;

  CostSpec cost;
  Eigen::VectorXd initial_state;
  Eigen::VectorXd target_state;
  Eigen::VectorXd initial_control;  // warm start for the first solve

  std::vector<CircleObstacle> obstacles;
  ChanceSpec chance;
  BoxLimits limits;
  DdpOptions solver;
  AlOptions al;

  std::uint64_t plant_seed = 1;
  std::uint64_t monte_carlo_seed = 1;

  Eigen::VectorXd reset_std;  // measurement noise hook, zero by default

  int nodes_per_dim() const { return quadrature_nodes > 0 ? quadrature_nodes : order + 2; }
  int state_dim() const { return static_cast<int>(initial_state.size()); }
  int control_dim() const { return static_cast<int>(limits.lower.size()); }
};

/// Parses and validates a scenario. Errors are ConfigError with a
/// "<source>:<line>: ..." prefix.
ScenarioConfig parse_scenario(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_scenario(const std::string& path);

/// Serializes back to JSON text (used for provenance in run outputs).
std::string scenario_to_json(const ScenarioConfig& config);

}  // namespace gpcddp
