#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace gpcddp {

/// Continuous-time dynamics xdot = f(x, u; zeta) with analytic partials.
/// zeta holds the model's (possibly uncertain) parameters in param_names() order.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  int param_dim() const { return static_cast<int>(param_names().size()); }

  /// Writes f into a pre-sized output.
  virtual void evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                        const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::VectorXd> out) const = 0;

  Eigen::VectorXd f(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                    const Eigen::Ref<const Eigen::VectorXd>& zeta) const;

  /// Writes df/dx (n x n) and df/du (n x m). Outputs must be pre-sized.
  virtual void partials(const Eigen::Ref<const Eigen::VectorXd>& x,
                        const Eigen::Ref<const Eigen::VectorXd>& u,
                        const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::MatrixXd> fx,
                        Eigen::Ref<Eigen::MatrixXd> fu) const = 0;

  Eigen::MatrixXd dfdx(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& u,
                       const Eigen::Ref<const Eigen::VectorXd>& zeta) const;
  Eigen::MatrixXd dfdu(const Eigen::Ref<const Eigen::VectorXd>& x,
                       const Eigen::Ref<const Eigen::VectorXd>& u,
                       const Eigen::Ref<const Eigen::VectorXd>& zeta) const;
};

/// Differential-drive robot. State (x, y, heading), controls are the wheel
/// angular rates (right, left), parameters (tread d, r_R, r_L).
class UnicycleModel final : public DynamicsModel {
 public:
  std::string name() const override { return "unicycle"; }
  int state_dim() const override { return 3; }
  int control_dim() const override { return 2; }
  std::vector<std::string> param_names() const override { return {"tread", "radius_right", "radius_left"}; }

  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::VectorXd> out) const override;
  void partials(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::MatrixXd> fx,
                Eigen::Ref<Eigen::MatrixXd> fu) const override;
};

struct QuadrotorConstants {
  double mass = 0.468;
  double arm_length = 0.225;
  Eigen::Vector3d inertia{4.856e-3, 4.856e-3, 8.801e-3};
  double gravity = 9.81;
};

/// 12-state quadrotor: position, Z-Y-X Euler angles (roll, pitch, yaw), world
/// frame velocity, body angular rates. Controls are the four rotor forces in
/// newtons. Parameters (k_d, k_l): k_d is both the linear translational drag
/// coefficient and, divided by k_l, the rotor yaw-torque-per-force ratio.
class QuadrotorModel final : public DynamicsModel {
 public:
  QuadrotorModel() = default;
  explicit QuadrotorModel(QuadrotorConstants c) : c_(std::move(c)) {}

  const QuadrotorConstants& constants() const { return c_; }
  double hover_force() const { return c_.mass * c_.gravity / 4.0; }

  std::string name() const override { return "quadrotor"; }
  int state_dim() const override { return 12; }
  int control_dim() const override { return 4; }
  std::vector<std::string> param_names() const override { return {"drag", "lift"}; }

  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::VectorXd> out) const override;
  void partials(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::MatrixXd> fx,
                Eigen::Ref<Eigen::MatrixXd> fu) const override;

 private:
  QuadrotorConstants c_;
};

/// xdot = (A0 + sum_p zeta_p A_p) x + B u. Used for exactness checks.
class LinearModel final : public DynamicsModel {
 public:
  LinearModel(Eigen::MatrixXd a0, std::vector<Eigen::MatrixXd> a_params, Eigen::MatrixXd b);

  std::string name() const override { return "linear"; }
  int state_dim() const override { return static_cast<int>(a0_.rows()); }
  int control_dim() const override { return static_cast<int>(b_.cols()); }
  std::vector<std::string> param_names() const override;

  Eigen::MatrixXd system_matrix(const Eigen::Ref<const Eigen::VectorXd>& zeta) const;
  const Eigen::MatrixXd& input_matrix() const { return b_; }

  void evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::VectorXd> out) const override;
  void partials(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::MatrixXd> fx,
                Eigen::Ref<Eigen::MatrixXd> fu) const override;

 private:
  Eigen::MatrixXd a0_;
  std::vector<Eigen::MatrixXd> a_params_;
  Eigen::MatrixXd b_;
};

/// One explicit Euler step X + dt * rhs(X, u).
template <typename Rhs>
Eigen::VectorXd euler_step(Rhs&& rhs, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& u, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("euler_step: dt must be positive");
  return x + dt * rhs(x, u);
}

std::shared_ptr<const DynamicsModel> make_model(const std::string& id,
                                                const QuadrotorConstants& quad = {});

}  // namespace gpcddp
