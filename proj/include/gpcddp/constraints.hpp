#pragma once

// Chance-constrained obstacle avoidance over gPC coefficients and the
// augmented-Lagrangian outer loop around the DDP solver.

#include "gpcddp/ddp.hpp"
#include "gpcddp/gpc.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace gpcddp {

struct CircleObstacle {
  Eigen::VectorXd center;  // one entry per position dimension
  double radius = 0.0;
};

struct ChanceSpec {
  double probability = 0.95;
  int samples = 1000;
  std::uint64_t seed = 0;
  std::vector<int> position_dims{0, 1};
};

Eigen::VectorXd position_mean(const Eigen::VectorXd& coeffs, int terms, const std::vector<int>& dims);
Eigen::MatrixXd position_covariance(const Eigen::VectorXd& coeffs, const BasisSet& basis,
                                    const std::vector<int>& dims);

struct ScalingFactor {
  double value = 0.0;
  bool regularized = false;  // Sigma was ill-conditioned and got a ridge
  bool degenerate = false;   // zero variance, the constraint is deterministic
};

/// Monte Carlo estimate of the Mahalanobis radius s(p) enclosing probability p
/// of the position distribution implied by a coefficient vector. The xi draws
/// are made once from the seed and reused for every evaluation.
class ChanceSampler {
 public:
  ChanceSampler(const BasisSet& basis, ChanceSpec spec);

  const ChanceSpec& spec() const { return spec_; }
  const BasisSet& basis() const { return basis_; }
  const Eigen::MatrixXd& samples() const { return xi_; }

  ScalingFactor scaling_factor(const Eigen::VectorXd& coeffs) const;
  /// Squared Mahalanobis distances of every sample (for coverage checks).
  Eigen::VectorXd mahalanobis(const Eigen::VectorXd& coeffs, bool* regularized = nullptr) const;

 private:
  BasisSet basis_;
  ChanceSpec spec_;
  Eigen::MatrixXd xi_;         // S x d
  Eigen::MatrixXd sample_basis_;  // S x (K+1)
};

ScalingFactor scaling_factor(const Eigen::VectorXd& coeffs, const BasisSet& basis, const ChanceSpec& spec);

struct LambdaMax {
  double value = 0.0;
  Eigen::MatrixXd grad;  // d lambda / d Sigma, symmetric
  bool smoothed = false;
};

/// Largest eigenvalue of a symmetric PSD matrix and its derivative v v'.
/// Near-repeated top eigenvalues use the smoothed
/// 1/2 (l1 + l2) + 1/2 sqrt((l1 - l2)^2 + eps^2), eps = 1e-8 trace.
LambdaMax lambda_max_with_grad(const Eigen::MatrixXd& sigma);

struct ConstraintEval {
  double value = 0.0;
  Eigen::VectorXd grad;  // over all coefficients
  bool smoothed = false;

  /// d2P/dG2 * grad grad'
  Eigen::MatrixXd gauss_newton_hessian(double curvature) const { return curvature * grad * grad.transpose(); }
};

/// G = (r_c + sqrt(s lambda_max))^2 - |mean - c|^2, feasible when G <= 0.
ConstraintEval obstacle_constraint(const Eigen::VectorXd& coeffs, const BasisSet& basis, const CircleObstacle& obs,
                                   double s, const std::vector<int>& dims);

struct PenaltyValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Powell-Hestenes-Rockafellar inequality penalty
/// P = (max(0, lambda + mu G)^2 - lambda^2) / (2 mu).
PenaltyValue al_penalty(double lambda, double mu, double g);

struct AlOptions {
  double mu_init = 10.0;
  double mu_increase = 10.0;
  double improvement_ratio = 0.25;
  double mu_max = 1e10;
  double tolerance = 1e-4;
  int max_outer_iterations = 20;
};

/// Multipliers and penalties, one row per constraint, one column per
/// constrained state X_1 .. X_N.
struct ALState {
  Eigen::MatrixXd lambdas;
  Eigen::MatrixXd penalties;
  Eigen::VectorXd last_violation;
  int outer_iterations = 0;
  bool penalty_capped = false;

  static ALState initial(int constraints, int horizon, double mu_init);
  int constraint_count() const { return static_cast<int>(lambdas.rows()); }
  int horizon() const { return static_cast<int>(lambdas.cols()); }
  /// Drop the first column and duplicate the last (receding horizon warm start).
  ALState shifted() const;
};

ALState al_update(const ALState& state, const Eigen::MatrixXd& g, const AlOptions& options);

/// Base expected cost plus AL penalties of all obstacle constraints.
class AugmentedObjective final : public Objective {
 public:
  AugmentedObjective(const QuadraticCost& base, const BasisSet& basis, const std::vector<CircleObstacle>& obstacles,
                     const std::vector<int>& dims, std::vector<double> scaling, const ALState& al);

  double running(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  double terminal(const Eigen::VectorXd& x) const override;
  void running_expansion(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         StageExpansion& out) const override;
  void terminal_expansion(const Eigen::VectorXd& x, Eigen::VectorXd& vx, Eigen::MatrixXd& vxx) const override;

 private:
  double inflation(int state_index, const Eigen::VectorXd& x) const;
  double penalty(int state_index, const Eigen::VectorXd& x) const;
  void penalty_expansion(int state_index, const Eigen::VectorXd& x, Eigen::VectorXd& gx, Eigen::MatrixXd& gxx) const;

  const QuadraticCost& base_;
  const BasisSet& basis_;
  const std::vector<CircleObstacle>& obstacles_;
  const std::vector<int>& dims_;
  std::vector<double> scaling_;  // s(p) per state index 0..N
  const ALState& al_;
};

/// w x N matrix of G for states X_1..X_N of a trajectory.
Eigen::MatrixXd evaluate_constraints(const std::vector<Eigen::VectorXd>& states, const BasisSet& basis,
                                     const std::vector<CircleObstacle>& obstacles, const std::vector<double>& scaling,
                                     const std::vector<int>& dims);

struct ConstrainedProblem {
  const GpcEulerDynamics* dynamics = nullptr;
  const QuadraticCost* cost = nullptr;
  Eigen::VectorXd x0;
  std::vector<CircleObstacle> obstacles;
  const ChanceSampler* sampler = nullptr;
  std::optional<BoxLimits> limits;
};

struct ConstrainedResult {
  Trajectory trajectory;
  ALState al;
  std::vector<double> scaling;  // s(p) per state 0..N at the returned trajectory
  Eigen::MatrixXd constraint_values;
  double max_violation = 0.0;
  std::vector<double> violation_history;  // per outer iteration
  int outer_iterations = 0;
  int inner_iterations = 0;
  double cost = 0.0;  // base expected cost of the returned trajectory
  bool converged = false;
  bool failed = false;
  bool inner_converged = false;
  std::string message;
};

ConstrainedResult solve_constrained(const ConstrainedProblem& problem, std::vector<Eigen::VectorXd> initial_controls,
                                    const AlOptions& al_options, const DdpOptions& ddp_options,
                                    const ALState* warm = nullptr);

}  // namespace gpcddp
