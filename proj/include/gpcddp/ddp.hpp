#pragma once

// Discrete-time iLQR-style DDP with control limits (projected-Newton box QP in
// the backward pass), backtracking line search and adaptive Quu regularization.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace gpcddp {

class DiscreteDynamics {
 public:
  virtual ~DiscreteDynamics() = default;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const = 0;
  /// fx, fu are resized by the caller to (n x n), (n x m).
  virtual void linearize(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::MatrixXd& fx,
                         Eigen::MatrixXd& fu) const = 0;
};

/// x_{k+1} = A x_k + B u_k
class LinearDiscreteDynamics final : public DiscreteDynamics {
 public:
  LinearDiscreteDynamics(Eigen::MatrixXd a, Eigen::MatrixXd b) : a_(std::move(a)), b_(std::move(b)) {}
  int state_dim() const override { return static_cast<int>(a_.rows()); }
  int control_dim() const override { return static_cast<int>(b_.cols()); }
  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override { return a_ * x + b_ * u; }
  void linearize(const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd& fx,
                 Eigen::MatrixXd& fu) const override {
    fx = a_;
    fu = b_;
  }

 private:
  Eigen::MatrixXd a_, b_;
};

struct StageExpansion {
  Eigen::VectorXd lx, lu;
  Eigen::MatrixXd lxx, luu, lux;  // lux is m x n

  void resize(int n, int m) {
    lx = Eigen::VectorXd::Zero(n);
    lu = Eigen::VectorXd::Zero(m);
    lxx = Eigen::MatrixXd::Zero(n, n);
    luu = Eigen::MatrixXd::Zero(m, m);
    lux = Eigen::MatrixXd::Zero(m, n);
  }
};

class Objective {
 public:
  virtual ~Objective() = default;
  virtual double running(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const = 0;
  virtual double terminal(const Eigen::VectorXd& x) const = 0;
  /// Adds the stage derivatives into `out`, which arrives zeroed.
  virtual void running_expansion(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 StageExpansion& out) const = 0;
  virtual void terminal_expansion(const Eigen::VectorXd& x, Eigen::VectorXd& vx, Eigen::MatrixXd& vxx) const = 0;
};

/// Expected quadratic tracking cost over gPC coefficients:
///   l_k = 1/2 (X - X_d,k)' A_X (X - X_d,k) + 1/2 u' R u,
///   phi = 1/2 (X - X_d,N)' Af_X (X - X_d,N).
/// `targets` holds either one target used at every step or N+1 of them.
struct QuadraticCost final : Objective {
  Eigen::MatrixXd state_weight;
  Eigen::MatrixXd control_weight;
  Eigen::MatrixXd terminal_weight;
  std::vector<Eigen::VectorXd> targets;

  const Eigen::VectorXd& target(int k) const;

  double running(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  double terminal(const Eigen::VectorXd& x) const override;
  void running_expansion(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         StageExpansion& out) const override;
  void terminal_expansion(const Eigen::VectorXd& x, Eigen::VectorXd& vx, Eigen::MatrixXd& vxx) const override;
};

/// Block-diagonal expected-cost weight: state i gets
/// diag(mean_w(i), moment_w(i) * gamma_1, ..., moment_w(i) * gamma_K).
Eigen::MatrixXd expected_state_weight(const Eigen::VectorXd& mean_weights, const Eigen::VectorXd& moment_weights,
                                      const Eigen::VectorXd& norms);

inline double expected_running_cost(const QuadraticCost& cost, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                    int k) {
  return cost.running(k, x, u);
}
inline double expected_terminal_cost(const QuadraticCost& cost, const Eigen::VectorXd& x) {
  return cost.terminal(x);
}

struct BoxLimits {
  Eigen::VectorXd lower, upper;

  BoxLimits() = default;
  BoxLimits(Eigen::VectorXd lo, Eigen::VectorXd hi);
  Eigen::VectorXd clamp(const Eigen::VectorXd& u) const { return u.cwiseMax(lower).cwiseMin(upper); }
  bool contains(const Eigen::VectorXd& u) const {
    return (u.array() >= lower.array()).all() && (u.array() <= upper.array()).all();
  }
};

// ---------------------------------------------------------------------------
// Box QP

enum class BoxQpStatus {
  HessianNotPositiveDefinite,
  NoDescentDirection,
  MaxIterations,
  LineSearchFailed,
  SmallImprovement,
  SmallGradient,
  AllClamped,
};

std::string to_string(BoxQpStatus s);

struct BoxQpResult {
  Eigen::VectorXd x;
  Eigen::Array<bool, Eigen::Dynamic, 1> free;
  BoxQpStatus status = BoxQpStatus::MaxIterations;
  int iterations = 0;
  double gradient_norm = 0.0;

  bool ok() const {
    return status != BoxQpStatus::HessianNotPositiveDefinite && status != BoxQpStatus::MaxIterations;
  }
};

/// Projected-Newton solution of min 1/2 x'Hx + q'x subject to lower <= x <= upper.
BoxQpResult boxqp(const Eigen::MatrixXd& h, const Eigen::VectorXd& q, const Eigen::VectorXd& lower,
                  const Eigen::VectorXd& upper, const Eigen::VectorXd& init, int max_iterations = 100);

// ---------------------------------------------------------------------------
// DDP

struct Trajectory {
  std::vector<Eigen::VectorXd> states;    // N + 1
  std::vector<Eigen::VectorXd> controls;  // N
  int horizon() const { return static_cast<int>(controls.size()); }
};

struct Policy {
  std::vector<Eigen::VectorXd> feedforward;
  std::vector<Eigen::MatrixXd> feedback;
  // expected change of cost for step alpha: alpha * d1 + alpha^2 * d2
  double d1 = 0.0;
  double d2 = 0.0;

  double expected_improvement(double alpha) const { return -(alpha * d1 + alpha * alpha * d2); }
};

struct BackwardPassResult {
  Policy policy;
  bool ok = true;
  int failed_step = -1;
};

struct Linearization {
  std::vector<Eigen::MatrixXd> fx, fu;
};

Linearization linearize(const DiscreteDynamics& dynamics, const Trajectory& nominal);

/// `warm` (optional) seeds the box QP with the previous feedforward.
BackwardPassResult backward_pass(const Trajectory& nominal, const Linearization& lin, const Objective& cost,
                                 const std::optional<BoxLimits>& limits, double reg, const Policy* warm = nullptr);

struct ForwardPassResult {
  Trajectory trajectory;
  double cost = 0.0;
  bool ok = false;
};

ForwardPassResult forward_pass(const Policy& policy, const Eigen::VectorXd& x0, const DiscreteDynamics& dynamics,
                               const Objective& cost, double alpha, const Trajectory& nominal,
                               const std::optional<BoxLimits>& limits);

/// Open-loop rollout; returns false on non-finite states or dynamics errors.
bool rollout(const DiscreteDynamics& dynamics, const Eigen::VectorXd& x0, const std::vector<Eigen::VectorXd>& controls,
             std::vector<Eigen::VectorXd>& states);

double total_cost(const Objective& cost, const Trajectory& traj);

struct DdpOptions {
  int max_iterations = 200;
  double cost_tolerance = 1e-6;
  double gradient_tolerance = 1e-6;
  double reg_init = 1e-6;
  double reg_min = 1e-6;  // below this the regularization snaps to zero
  double reg_max = 1e8;
  double reg_increase = 10.0;
  double reg_decrease = 2.0;
  int line_search_steps = 11;  // alpha = 1, 1/2, ..., 2^-10
  double armijo = 1e-4;
};

struct DdpResult {
  Trajectory trajectory;
  Policy policy;
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  int failed_step = -1;
  std::string message;
  std::vector<double> accepted_costs;  // cost after every accepted step, initial cost first
};

DdpResult solve(const DiscreteDynamics& dynamics, const Objective& cost, const Eigen::VectorXd& x0,
                std::vector<Eigen::VectorXd> initial_controls, const std::optional<BoxLimits>& limits,
                const DdpOptions& options = {});

}  // namespace gpcddp
