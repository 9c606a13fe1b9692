#include "gpcddp/models.hpp"

#include <cmath>
#include <stdexcept>

namespace gpcddp {

Eigen::VectorXd DynamicsModel::f(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const Eigen::Ref<const Eigen::VectorXd>& u,
                                 const Eigen::Ref<const Eigen::VectorXd>& zeta) const {
  Eigen::VectorXd out(state_dim());
  evaluate(x, u, zeta, out);
  return out;
}

Eigen::MatrixXd DynamicsModel::dfdx(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& u,
                                    const Eigen::Ref<const Eigen::VectorXd>& zeta) const {
  Eigen::MatrixXd fx(state_dim(), state_dim());
  Eigen::MatrixXd fu(state_dim(), control_dim());
  partials(x, u, zeta, fx, fu);
  return fx;
}

Eigen::MatrixXd DynamicsModel::dfdu(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const Eigen::Ref<const Eigen::VectorXd>& u,
                                    const Eigen::Ref<const Eigen::VectorXd>& zeta) const {
  Eigen::MatrixXd fx(state_dim(), state_dim());
  Eigen::MatrixXd fu(state_dim(), control_dim());
  partials(x, u, zeta, fx, fu);
  return fu;
}

// ---------------------------------------------------------------------------
// Unicycle

namespace {
void check_tread(double d) {
  if (!(d > 0.0)) throw std::domain_error("unicycle: tread must be positive");
}
}  // namespace

void UnicycleModel::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                              const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::VectorXd> out) const {
  const double d = zeta(0), rr = zeta(1), rl = zeta(2);
  check_tread(d);
  const double vr = rr * u(0), vl = rl * u(1);
  const double v = 0.5 * (vr + vl);
  const double w = (vr - vl) / (2.0 * d);
  out << v * std::cos(x(2)), v * std::sin(x(2)), w;
}

void UnicycleModel::partials(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& u,
                             const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::MatrixXd> fx,
                             Eigen::Ref<Eigen::MatrixXd> fu) const {
  const double d = zeta(0), rr = zeta(1), rl = zeta(2);
  check_tread(d);
  const double v = 0.5 * (rr * u(0) + rl * u(1));
  const double c = std::cos(x(2)), s = std::sin(x(2));
  fx.setZero();
  fx(0, 2) = -v * s;
  fx(1, 2) = v * c;
  fu(0, 0) = 0.5 * rr * c;
  fu(0, 1) = 0.5 * rl * c;
  fu(1, 0) = 0.5 * rr * s;
  fu(1, 1) = 0.5 * rl * s;
  fu(2, 0) = rr / (2.0 * d);
  fu(2, 1) = -rl / (2.0 * d);
}

// ---------------------------------------------------------------------------
// Quadrotor

namespace {
constexpr double kMinPitchCos = 1e-6;

struct Trig {
  double sphi, cphi, sth, cth, sps, cps;
  explicit Trig(const Eigen::Ref<const Eigen::VectorXd>& x)
      : sphi(std::sin(x(3))), cphi(std::cos(x(3))), sth(std::sin(x(4))), cth(std::cos(x(4))),
        sps(std::sin(x(5))), cps(std::cos(x(5))) {
    if (std::abs(cth) < kMinPitchCos) throw std::domain_error("quadrotor: Euler-angle singularity (pitch at +-pi/2)");
  }
};
}  // namespace

void QuadrotorModel::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                               const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::VectorXd> out) const {
  const Trig t(x);
  const double kd = zeta(0), kl = zeta(1);
  if (!(kl > 0.0)) throw std::domain_error("quadrotor: lift coefficient must be positive");
  const double yaw_ratio = kd / kl;
  const double p = x(9), q = x(10), r = x(11);
  const double thrust = u.sum();
  const double m = c_.mass, l = c_.arm_length;
  const double ixx = c_.inertia(0), iyy = c_.inertia(1), izz = c_.inertia(2);
  const double tth = t.sth / t.cth;

  out.segment<3>(0) = x.segment<3>(6);
  out(3) = p + t.sphi * tth * q + t.cphi * tth * r;
  out(4) = t.cphi * q - t.sphi * r;
  out(5) = (t.sphi * q + t.cphi * r) / t.cth;
  const double ax = t.cps * t.sth * t.cphi + t.sps * t.sphi;
  const double ay = t.sps * t.sth * t.cphi - t.cps * t.sphi;
  const double az = t.cth * t.cphi;
  out(6) = thrust / m * ax - kd / m * x(6);
  out(7) = thrust / m * ay - kd / m * x(7);
  out(8) = thrust / m * az - c_.gravity - kd / m * x(8);
  const double tau_phi = l * (u(3) - u(1));
  const double tau_theta = l * (u(2) - u(0));
  const double tau_psi = yaw_ratio * (u(0) - u(1) + u(2) - u(3));
  out(9) = (tau_phi - (izz - iyy) * q * r) / ixx;
  out(10) = (tau_theta - (ixx - izz) * p * r) / iyy;
  out(11) = (tau_psi - (iyy - ixx) * p * q) / izz;
}

void QuadrotorModel::partials(const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& u,
                              const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::MatrixXd> fx,
                              Eigen::Ref<Eigen::MatrixXd> fu) const {
  const Trig t(x);
  const double kd = zeta(0), kl = zeta(1);
  if (!(kl > 0.0)) throw std::domain_error("quadrotor: lift coefficient must be positive");
  const double yaw_ratio = kd / kl;
  const double p = x(9), q = x(10), r = x(11);
  const double thrust = u.sum();
  const double m = c_.mass, l = c_.arm_length;
  const double ixx = c_.inertia(0), iyy = c_.inertia(1), izz = c_.inertia(2);
  const double tth = t.sth / t.cth;
  const double c2 = t.cth * t.cth;

  fx.setZero();
  fu.setZero();
  fx.block<3, 3>(0, 6).setIdentity();

  // Euler angle kinematics
  fx(3, 3) = t.cphi * tth * q - t.sphi * tth * r;
  fx(3, 4) = (t.sphi * q + t.cphi * r) / c2;
  fx(4, 3) = -t.sphi * q - t.cphi * r;
  fx(5, 3) = (t.cphi * q - t.sphi * r) / t.cth;
  fx(5, 4) = (t.sphi * q + t.cphi * r) * t.sth / c2;
  fx(3, 9) = 1.0;
  fx(3, 10) = t.sphi * tth;
  fx(3, 11) = t.cphi * tth;
  fx(4, 10) = t.cphi;
  fx(4, 11) = -t.sphi;
  fx(5, 10) = t.sphi / t.cth;
  fx(5, 11) = t.cphi / t.cth;

  // thrust direction
  const double tm = thrust / m;
  fx(6, 3) = tm * (-t.cps * t.sth * t.sphi + t.sps * t.cphi);
  fx(6, 4) = tm * (t.cps * t.cth * t.cphi);
  fx(6, 5) = tm * (-t.sps * t.sth * t.cphi + t.cps * t.sphi);
  fx(7, 3) = tm * (-t.sps * t.sth * t.sphi - t.cps * t.cphi);
  fx(7, 4) = tm * (t.sps * t.cth * t.cphi);
  fx(7, 5) = tm * (t.cps * t.sth * t.cphi + t.sps * t.sphi);
  fx(8, 3) = -tm * t.cth * t.sphi;
  fx(8, 4) = -tm * t.sth * t.cphi;
  fx(6, 6) = fx(7, 7) = fx(8, 8) = -kd / m;

  const double ax = t.cps * t.sth * t.cphi + t.sps * t.sphi;
  const double ay = t.sps * t.sth * t.cphi - t.cps * t.sphi;
  const double az = t.cth * t.cphi;
  for (int i = 0; i < 4; ++i) {
    fu(6, i) = ax / m;
    fu(7, i) = ay / m;
    fu(8, i) = az / m;
  }

  // rigid-body rotation
  fx(9, 10) = -(izz - iyy) * r / ixx;
  fx(9, 11) = -(izz - iyy) * q / ixx;
  fx(10, 9) = -(ixx - izz) * r / iyy;
  fx(10, 11) = -(ixx - izz) * p / iyy;
  fx(11, 9) = -(iyy - ixx) * q / izz;
  fx(11, 10) = -(iyy - ixx) * p / izz;

  fu(9, 1) = -l / ixx;
  fu(9, 3) = l / ixx;
  fu(10, 0) = -l / iyy;
  fu(10, 2) = l / iyy;
  fu(11, 0) = yaw_ratio / izz;
  fu(11, 1) = -yaw_ratio / izz;
  fu(11, 2) = yaw_ratio / izz;
  fu(11, 3) = -yaw_ratio / izz;
}

// ---------------------------------------------------------------------------
// Linear

LinearModel::LinearModel(Eigen::MatrixXd a0, std::vector<Eigen::MatrixXd> a_params, Eigen::MatrixXd b)
    : a0_(std::move(a0)), a_params_(std::move(a_params)), b_(std::move(b)) {
  if (a0_.rows() != a0_.cols() || b_.rows() != a0_.rows())
    throw std::invalid_argument("LinearModel: inconsistent dimensions");
  for (const auto& a : a_params_)
    if (a.rows() != a0_.rows() || a.cols() != a0_.cols())
      throw std::invalid_argument("LinearModel: parameter matrix dimension mismatch");
}

std::vector<std::string> LinearModel::param_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < a_params_.size(); ++i) names.push_back("a" + std::to_string(i));
  return names;
}

Eigen::MatrixXd LinearModel::system_matrix(const Eigen::Ref<const Eigen::VectorXd>& zeta) const {
  Eigen::MatrixXd a = a0_;
  for (std::size_t i = 0; i < a_params_.size(); ++i) a += zeta(static_cast<Eigen::Index>(i)) * a_params_[i];
  return a;
}

void LinearModel::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                            const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::VectorXd> out) const {
  out.noalias() = system_matrix(zeta) * x;
  out.noalias() += b_ * u;
}

void LinearModel::partials(const Eigen::Ref<const Eigen::VectorXd>&, const Eigen::Ref<const Eigen::VectorXd>&,
                           const Eigen::Ref<const Eigen::VectorXd>& zeta, Eigen::Ref<Eigen::MatrixXd> fx,
                           Eigen::Ref<Eigen::MatrixXd> fu) const {
  fx = system_matrix(zeta);
  fu = b_;
}

std::shared_ptr<const DynamicsModel> make_model(const std::string& id, const QuadrotorConstants& quad) {
  if (id == "unicycle") return std::make_shared<UnicycleModel>();
  if (id == "quadrotor") return std::make_shared<QuadrotorModel>(quad);
  throw std::invalid_argument("unknown model '" + id + "'");
}

}  // namespace gpcddp
