#include "gpcddp/models.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gpcddp;

namespace {

Eigen::Vector3d tread_radii(double d, double rr, double rl) { return {d, rr, rl}; }

Eigen::VectorXd quad_params() {
  Eigen::VectorXd z(2);
  z << 1.140e-7, 2.980e-6;
  return z;
}

double fd_partials_error(const DynamicsModel& m, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& z) {
  const Eigen::MatrixXd fx = m.dfdx(x, u, z);
  const Eigen::MatrixXd fu = m.dfdu(x, u, z);
  const Eigen::MatrixXd fx_fd = oracle::fd_jacobian([&](const Eigen::VectorXd& xx) { return m.f(xx, u, z); }, x);
  const Eigen::MatrixXd fu_fd = oracle::fd_jacobian([&](const Eigen::VectorXd& uu) { return m.f(x, uu, z); }, u);
  const double scale = 1.0 + std::max(fx_fd.cwiseAbs().maxCoeff(), fu_fd.cwiseAbs().maxCoeff());
  return std::max((fx - fx_fd).cwiseAbs().maxCoeff(), (fu - fu_fd).cwiseAbs().maxCoeff()) / scale;
}

}  // namespace

TEST_CASE("unicycle examples") {
  const UnicycleModel m;
  CHECK(m.state_dim() == 3);
  CHECK(m.control_dim() == 2);
  const Eigen::Vector3d f = m.f(Eigen::Vector3d::Zero(), Eigen::Vector2d(1, 1), tread_radii(0.2, 0.2, 0.2));
  CHECK(f(0) == doctest::Approx(0.2));
  CHECK(f(1) == doctest::Approx(0.0));
  CHECK(f(2) == doctest::Approx(0.0));

  const double r = 0.15, d = 0.3;
  const Eigen::Vector3d spin = m.f(Eigen::Vector3d::Zero(), Eigen::Vector2d(1, -1), tread_radii(d, r, r));
  CHECK(spin(0) == doctest::Approx(0.0));
  CHECK(spin(2) == doctest::Approx(r / d));

  CHECK_THROWS_AS(m.f(Eigen::Vector3d::Zero(), Eigen::Vector2d(1, 1), tread_radii(0.0, 0.2, 0.2)), std::domain_error);
  CHECK_THROWS_AS(m.f(Eigen::Vector3d::Zero(), Eigen::Vector2d(1, 1), tread_radii(-0.1, 0.2, 0.2)),
                  std::domain_error);
}

TEST_CASE("unicycle speed invariance") {
  const UnicycleModel m;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Vector3d x(unif(rng), unif(rng), unif(rng));
    const Eigen::Vector2d u(unif(rng), unif(rng));
    const double c = 1.0 + std::abs(unif(rng));
    const Eigen::Vector3d a = m.f(x, u, tread_radii(0.25, 0.2, 0.18));
    const Eigen::Vector3d b = m.f(x, u / c, tread_radii(0.25, 0.2 * c, 0.18 * c));
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("analytic partials match finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  SUBCASE("unicycle") {
    const UnicycleModel m;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector3d x(3 * unif(rng), 3 * unif(rng), 3 * unif(rng));
      const Eigen::Vector2d u(20 * unif(rng), 20 * unif(rng));
      const Eigen::Vector3d z(0.2 + 0.05 * unif(rng), 0.2 + 0.05 * unif(rng), 0.2 + 0.05 * unif(rng));
      worst = std::max(worst, fd_partials_error(m, x, u, z));
    }
    CHECK(worst <= 1e-6);
  }
  SUBCASE("quadrotor") {
    const QuadrotorModel m;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd x(12);
      for (int k = 0; k < 12; ++k) x(k) = unif(rng);
      x(4) *= 1.2;  // pitch within (-pi/2, pi/2)
      Eigen::Vector4d u(1.5 + unif(rng), 1.5 + unif(rng), 1.5 + unif(rng), 1.5 + unif(rng));
      Eigen::VectorXd z = quad_params();
      z(0) *= 1.0 + unif(rng) / 3.0;
      z(1) *= 1.0 + unif(rng) / 3.0;
      worst = std::max(worst, fd_partials_error(m, x, u, z));
    }
    CHECK(worst <= 1e-5);
  }
  SUBCASE("linear") {
    Eigen::MatrixXd a0 = Eigen::MatrixXd::Random(3, 3), a1 = Eigen::MatrixXd::Random(3, 3);
    const LinearModel m(a0, {a1}, Eigen::MatrixXd::Random(3, 2));
    CHECK(fd_partials_error(m, Eigen::Vector3d(1, 2, 3), Eigen::Vector2d(-1, 1), Eigen::VectorXd::Constant(1, 0.3)) <=
          1e-8);
  }
}

TEST_CASE("quadrotor hover and free fall") {
  const QuadrotorModel m;
  const Eigen::VectorXd z = quad_params();
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(12);
  const Eigen::Vector4d hover = Eigen::Vector4d::Constant(m.hover_force());
  CHECK(m.f(x, hover, z).cwiseAbs().maxCoeff() <= 1e-12);

  Eigen::VectorXd x_far = x;
  x_far.head<3>() << 3, -3, 3;
  CHECK(m.f(x_far, hover, z).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd fall = m.f(x, Eigen::Vector4d::Zero(), z);
  CHECK(fall(8) == doctest::Approx(-9.81));
  CHECK(fall.head<8>().cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd bad = x;
  bad(4) = M_PI / 2;
  CHECK_THROWS_AS(m.f(bad, hover, z), std::domain_error);
}

TEST_CASE("quadrotor linearization at hover") {
  const QuadrotorModel m;
  const Eigen::MatrixXd a = m.dfdx(Eigen::VectorXd::Zero(12), Eigen::Vector4d::Constant(m.hover_force()), quad_params());
  // position rows depend only on the velocity columns
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 12; ++j) CHECK(a(i, j) == (j == i + 6 ? 1.0 : 0.0));
  }
  // velocity rows: gravity coupling through pitch and roll plus drag
  CHECK(a(6, 4) == doctest::Approx(9.81));
  CHECK(a(7, 3) == doctest::Approx(-9.81));
  CHECK(a(6, 6) == doctest::Approx(-1.140e-7 / 0.468));
}

TEST_CASE("quadrotor torques") {
  const QuadrotorModel m;
  const Eigen::VectorXd z = quad_params();
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(12);
  const double h = m.hover_force();
  const Eigen::VectorXd roll = m.f(x, Eigen::Vector4d(h, h - 0.1, h, h + 0.1), z);
  CHECK(roll(9) == doctest::Approx(0.225 * 0.2 / 4.856e-3));
  const Eigen::VectorXd yaw = m.f(x, Eigen::Vector4d(h + 0.1, h - 0.1, h + 0.1, h - 0.1), z);
  CHECK(yaw(11) == doctest::Approx(z(0) / z(1) * 0.4 / 8.801e-3));
  CHECK(yaw(9) == doctest::Approx(0.0));
}

TEST_CASE("euler step") {
  const UnicycleModel m;
  const Eigen::Vector3d z = tread_radii(0.2, 0.2, 0.2);
  // wheel rate 5 gives v = 1
  const auto rhs = [&](const auto& x, const auto& u) { return m.f(x, u, z); };
  const Eigen::VectorXd next = euler_step(rhs, Eigen::Vector3d::Zero(), Eigen::Vector2d(5, 5), 0.02);
  CHECK(next(0) == doctest::Approx(0.02));
  CHECK(next(1) == 0.0);
  CHECK(next(2) == 0.0);

  const auto zero = [](const auto& x, const auto&) { return Eigen::VectorXd::Zero(x.size()); };
  const Eigen::Vector3d x0(1, 2, 3);
  CHECK(euler_step(zero, x0, Eigen::Vector2d(1, 1), 0.1) == Eigen::VectorXd(x0));
  CHECK_THROWS(euler_step(zero, x0, Eigen::Vector2d(1, 1), 0.0));
}

TEST_CASE("euler step is first order") {
  // xdot = -x, exact solution exp(-t)
  const auto rhs = [](const auto& x, const auto&) -> Eigen::VectorXd { return -x; };
  auto integrate = [&](double dt) {
    Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
    const int steps = static_cast<int>(std::lround(1.0 / dt));
    for (int k = 0; k < steps; ++k) x = euler_step(rhs, x, Eigen::VectorXd::Zero(1), dt);
    return std::abs(x(0) - std::exp(-1.0));
  };
  const double e1 = integrate(0.01), e2 = integrate(0.005);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("model factory") {
  CHECK(make_model("unicycle")->name() == "unicycle");
  CHECK(make_model("quadrotor")->param_names() == std::vector<std::string>{"drag", "lift"});
  CHECK_THROWS_AS(make_model("bicycle"), std::invalid_argument);
}
