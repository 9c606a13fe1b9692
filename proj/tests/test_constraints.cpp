#include "gpcddp/constraints.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace gpcddp;

namespace {

const PolyFamily kHermite = PolyFamily::HermiteProbabilists;
const PolyFamily kLegendre = PolyFamily::LegendreUniform;

Eigen::VectorXd random_coeffs(int n, int terms, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd x(n * terms);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = g(rng) * (i % terms == 0 ? 1.0 : scale);
  return x;
}

// position = mean + L xi with xi standard normal, encoded on a first-order Hermite basis
Eigen::VectorXd gaussian_position(const BasisSet& basis, const Eigen::VectorXd& mean, const Eigen::MatrixXd& l) {
  const int t = basis.count();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(mean.size() * t);
  for (Eigen::Index a = 0; a < mean.size(); ++a) {
    x(a * t) = mean(a);
    for (Eigen::Index j = 0; j < l.cols(); ++j) x(a * t + 1 + j) = l(a, j);
  }
  return x;
}

ChanceSpec spec(int samples, std::uint64_t seed, std::vector<int> dims = {0, 1}) {
  ChanceSpec s;
  s.probability = 0.95;
  s.samples = samples;
  s.seed = seed;
  s.position_dims = std::move(dims);
  return s;
}

}  // namespace

TEST_CASE("position covariance") {
  const BasisSet b = build_basis({kHermite, kHermite}, 1);
  CHECK(position_covariance(lift_state(Eigen::Vector3d(1, 2, 3), 3), b, {0, 1}).isZero(0.0));

  Eigen::VectorXd x = lift_state(Eigen::Vector3d(1, 2, 3), 3);
  x(1) = 0.3;  // sigma_x on xi_1
  x(5) = 0.2;  // sigma_y on xi_2
  const Eigen::MatrixXd s = position_covariance(x, b, {0, 1});
  CHECK(s(0, 0) == doctest::Approx(0.09));
  CHECK(s(1, 1) == doctest::Approx(0.04));
  CHECK(s(0, 1) == 0.0);

  std::mt19937_64 rng(3);
  const BasisSet b2 = build_basis({kHermite, kLegendre, kHermite}, 2);
  const Eigen::VectorXd r = random_coeffs(4, b2.count(), rng, 0.4);
  const Eigen::MatrixXd full = covariance(r, b2);
  const Eigen::MatrixXd sub = position_covariance(r, b2, {2, 0});
  CHECK(sub(0, 0) == full(2, 2));
  CHECK(sub(0, 1) == full(2, 0));
  CHECK(sub(1, 1) == full(0, 0));
  CHECK_THROWS_AS(position_covariance(r, b2, {0, 7}), std::out_of_range);
}

TEST_CASE("scaling factor") {
  const BasisSet b = build_basis({kHermite, kHermite}, 1);
  Eigen::Matrix2d l;
  l << 0.3, 0.1, -0.05, 0.2;
  const Eigen::VectorXd x = gaussian_position(b, Eigen::Vector2d(1.0, -0.5), l);

  SUBCASE("Gaussian position gives the chi-square quantile") {
    const ScalingFactor s = ChanceSampler(b, spec(10000, 99)).scaling_factor(x);
    CHECK(!s.degenerate);
    CHECK(std::abs(s.value / oracle::kChi2Quantile95Dof2 - 1.0) <= 0.05);
  }
  SUBCASE("three dimensions") {
    const BasisSet b3 = build_basis({kHermite, kHermite, kHermite}, 1);
    Eigen::Matrix3d l3;
    l3 << 0.3, 0.1, 0.0, -0.05, 0.2, 0.1, 0.02, 0.0, 0.4;
    const Eigen::VectorXd x3 = gaussian_position(b3, Eigen::Vector3d(1, 2, 3), l3);
    const ScalingFactor s = ChanceSampler(b3, spec(10000, 5, {0, 1, 2})).scaling_factor(x3);
    CHECK(std::abs(s.value / oracle::kChi2Quantile95Dof3 - 1.0) <= 0.05);
  }
  SUBCASE("zero variance is degenerate") {
    const ScalingFactor s = ChanceSampler(b, spec(1000, 1)).scaling_factor(lift_state(Eigen::Vector2d(1, 1), 3));
    CHECK(s.degenerate);
    CHECK(s.value == 0.0);
  }
  SUBCASE("fixed seed is reproducible") {
    const double a = ChanceSampler(b, spec(2000, 7)).scaling_factor(x).value;
    const double c = ChanceSampler(b, spec(2000, 7)).scaling_factor(x).value;
    CHECK(a == c);
    CHECK(scaling_factor(x, b, spec(2000, 7)).value == a);
  }
  SUBCASE("singular covariance is regularized and flagged") {
    Eigen::Matrix2d rank1;
    rank1 << 0.3, 0.0, 0.6, 0.0;
    const ScalingFactor s =
        ChanceSampler(b, spec(1000, 2)).scaling_factor(gaussian_position(b, Eigen::Vector2d::Zero(), rank1));
    CHECK(s.regularized);
    CHECK(std::isfinite(s.value));
  }
  SUBCASE("invalid specs") {
    CHECK_THROWS_AS(ChanceSampler(b, spec(50, 1)), std::invalid_argument);
    ChanceSpec bad = spec(1000, 1);
    bad.probability = 1.0;
    CHECK_THROWS_AS(ChanceSampler(b, bad), std::invalid_argument);
  }
}

TEST_CASE("ellipsoid coverage for Gaussian positions") {
  const BasisSet b = build_basis({kHermite, kHermite}, 1);
  Eigen::Matrix2d l;
  l << 0.2, -0.15, 0.1, 0.25;
  const Eigen::VectorXd x = gaussian_position(b, Eigen::Vector2d(0.5, 0.5), l);
  const double s = ChanceSampler(b, spec(10000, 3)).scaling_factor(x).value;
  // fresh draws, independent of the ones that produced s
  const Eigen::VectorXd d2 = ChanceSampler(b, spec(100000, 4)).mahalanobis(x);
  const double inside = (d2.array() <= s).cast<double>().mean();
  CHECK(std::abs(inside - 0.95) <= 0.015);
}

TEST_CASE("lambda max") {
  SUBCASE("axis aligned") {
    const LambdaMax lm = lambda_max_with_grad(Eigen::Vector2d(2.0, 1.0).asDiagonal());
    CHECK(lm.value == doctest::Approx(2.0));
    CHECK(std::abs(lm.grad(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(lm.grad(1, 1)) <= 1e-15);
    CHECK(!lm.smoothed);
  }
  SUBCASE("isotropic uses the smoothed branch") {
    const LambdaMax lm = lambda_max_with_grad(0.7 * Eigen::Matrix2d::Identity());
    CHECK(lm.smoothed);
    CHECK(lm.value == doctest::Approx(0.7).epsilon(1e-7));
    CHECK(lm.grad.trace() == doctest::Approx(1.0));
  }
  SUBCASE("scalar") { CHECK(lambda_max_with_grad(Eigen::MatrixXd::Constant(1, 1, 3.0)).value == 3.0); }
  SUBCASE("gradient against finite differences") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int dim : {2, 3}) {
      for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd m(dim, dim);
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) m(i, j) = g(rng);
        const Eigen::MatrixXd sigma = m * m.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
        const LambdaMax lm = lambda_max_with_grad(sigma);
        const double h = 1e-6;
        for (int i = 0; i < dim; ++i) {
          for (int j = i; j < dim; ++j) {
            Eigen::MatrixXd e = Eigen::MatrixXd::Zero(dim, dim);
            e(i, j) = e(j, i) = 1.0;
            const double fd = (lambda_max_with_grad(sigma + h * e).value - lambda_max_with_grad(sigma - h * e).value) /
                              (2.0 * h);
            const double analytic = (lm.grad.array() * e.array()).sum();
            CHECK(std::abs(fd - analytic) <= 1e-6);
          }
        }
      }
    }
  }
}

TEST_CASE("obstacle constraint") {
  SUBCASE("deterministic examples") {
    const BasisSet b = build_basis({kHermite}, 1);
    const CircleObstacle obs{Eigen::Vector2d(0, 0), 0.5};
    const ConstraintEval far = obstacle_constraint(lift_state(Eigen::Vector3d(2, 0, 0), 2), b, obs, 5.0, {0, 1});
    CHECK(far.value == doctest::Approx(-3.75));
    const ConstraintEval edge = obstacle_constraint(lift_state(Eigen::Vector3d(0.3, 0.4, 0), 2), b, obs, 5.0, {0, 1});
    CHECK(std::abs(edge.value) <= 1e-15);
    CHECK_THROWS(obstacle_constraint(lift_state(Eigen::Vector3d(0, 0, 0), 2), b, obs, -1.0, {0, 1}));
  }
  SUBCASE("inflation by the largest eigenvalue") {
    const BasisSet b = build_basis({kHermite, kHermite}, 1);
    Eigen::VectorXd x = lift_state(Eigen::Vector3d(2, 0, 0), 3);
    x(1) = 0.3;
    x(5) = 0.1;
    const double s = 5.991;
    const ConstraintEval c = obstacle_constraint(x, b, {Eigen::Vector2d(0, 0), 0.5}, s, {0, 1});
    const double r = 0.5 + std::sqrt(s * 0.09);
    CHECK(c.value == doctest::Approx(r * r - 4.0));
  }
  SUBCASE("gradients against finite differences") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int dims : {2, 3}) {
      const BasisSet b = build_basis({kHermite, kLegendre, kHermite}, 2);
      const std::vector<int> pd = dims == 2 ? std::vector<int>{0, 1} : std::vector<int>{0, 1, 2};
      double worst = 0.0;
      for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd x = random_coeffs(4, b.count(), rng, 0.2);
        CircleObstacle obs;
        obs.center = Eigen::VectorXd::Random(dims);
        obs.radius = 0.3 + 0.2 * std::abs(unif(rng));
        const double s = 3.0 + 3.0 * std::abs(unif(rng));
        const ConstraintEval c = obstacle_constraint(x, b, obs, s, pd);
        const Eigen::VectorXd fd = oracle::fd_gradient(
            [&](const Eigen::VectorXd& xx) { return obstacle_constraint(xx, b, obs, s, pd).value; }, x);
        worst = std::max(worst, (c.grad - fd).cwiseAbs().maxCoeff() / (1.0 + fd.cwiseAbs().maxCoeff()));
      }
      CHECK(worst <= 1e-5);
    }
  }
}

TEST_CASE("circle contains the confidence ellipsoid") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix2d m;
    m << g(rng), g(rng), g(rng), g(rng);
    const Eigen::Matrix2d sigma = m * m.transpose() + 0.01 * Eigen::Matrix2d::Identity();
    const double s = 5.991;
    const double radius = std::sqrt(s * lambda_max_with_grad(sigma).value);
    const Eigen::Matrix2d chol = sigma.llt().matrixL();
    for (int k = 0; k < 360; ++k) {
      const double t = 2.0 * M_PI * k / 360.0;
      const Eigen::Vector2d p = std::sqrt(s) * chol * Eigen::Vector2d(std::cos(t), std::sin(t));
      CHECK(p.norm() <= radius + 1e-9);
    }
  }
}

TEST_CASE("augmented Lagrangian penalty") {
  CHECK(al_penalty(0.0, 10.0, -0.3).value == 0.0);
  CHECK(al_penalty(0.0, 10.0, 0.0).value == 0.0);
  const PenaltyValue p = al_penalty(0.0, 10.0, 0.5);
  CHECK(p.value == doctest::Approx(1.25));
  CHECK(p.d1 == doctest::Approx(5.0));
  CHECK(p.d2 == 10.0);
  // kink at lambda + mu G = 0
  const double lambda = 2.0, mu = 4.0, kink = -lambda / mu;
  CHECK(al_penalty(lambda, mu, kink - 1e-12).d1 == 0.0);
  CHECK(std::abs(al_penalty(lambda, mu, kink + 1e-12).d1) <= 1e-10);
  CHECK(al_penalty(lambda, mu, kink - 1e-9).value == doctest::Approx(al_penalty(lambda, mu, kink + 1e-9).value));
  CHECK_THROWS(al_penalty(0.0, 0.0, 1.0));
  CHECK_THROWS(al_penalty(-1.0, 1.0, 1.0));
}

TEST_CASE("augmented Lagrangian update") {
  AlOptions opt;
  SUBCASE("feasible point keeps multipliers at zero") {
    const ALState st = ALState::initial(2, 3, 10.0);
    const ALState next = al_update(st, Eigen::MatrixXd::Constant(2, 3, -0.5), opt);
    CHECK(next.lambdas.isZero(0.0));
    CHECK(next.penalties == st.penalties);
  }
  SUBCASE("multiplier shrinks on strict satisfaction") {
    ALState st = ALState::initial(1, 1, 10.0);
    st.lambdas(0, 0) = 1.0;
    const ALState next = al_update(st, Eigen::MatrixXd::Constant(1, 1, -0.2), opt);
    CHECK(next.lambdas(0, 0) == 0.0);
  }
  SUBCASE("stagnant violation multiplies the penalty by ten") {
    ALState st = ALState::initial(1, 2, 10.0);
    st = al_update(st, Eigen::MatrixXd::Constant(1, 2, 0.1), opt);
    CHECK(st.penalties(0, 0) == 10.0);  // no previous violation to compare with
    CHECK(st.lambdas(0, 0) == doctest::Approx(1.0));
    const ALState next = al_update(st, Eigen::MatrixXd::Constant(1, 2, 0.09), opt);
    CHECK(next.penalties(0, 0) == 100.0);
    CHECK(next.penalties(0, 1) == 100.0);
    const ALState improved = al_update(st, Eigen::MatrixXd::Constant(1, 2, 0.01), opt);
    CHECK(improved.penalties(0, 0) == 10.0);
  }
  SUBCASE("penalty cap is flagged") {
    AlOptions capped = opt;
    capped.mu_max = 50.0;
    ALState st = ALState::initial(1, 1, 10.0);
    st = al_update(st, Eigen::MatrixXd::Constant(1, 1, 1.0), capped);
    st = al_update(st, Eigen::MatrixXd::Constant(1, 1, 1.0), capped);
    CHECK(st.penalties(0, 0) == 50.0);
    CHECK(st.penalty_capped);
  }
  SUBCASE("monotone schedule over random sequences") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> g(0.0, 0.2);
    ALState st = ALState::initial(3, 5, 10.0);
    for (int it = 0; it < 30; ++it) {
      Eigen::MatrixXd gm(3, 5);
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 5; ++k) gm(i, k) = g(rng);
      const ALState next = al_update(st, gm, opt);
      CHECK((next.penalties.array() >= st.penalties.array()).all());
      CHECK((next.lambdas.array() >= 0.0).all());
      st = next;
    }
  }
  SUBCASE("shift drops the first column and repeats the last") {
    ALState st = ALState::initial(1, 3, 10.0);
    st.lambdas << 1, 2, 3;
    st.penalties << 10, 20, 30;
    const ALState s = st.shifted();
    CHECK(s.lambdas == (Eigen::MatrixXd(1, 3) << 2, 3, 3).finished());
    CHECK(s.penalties == (Eigen::MatrixXd(1, 3) << 20, 30, 30).finished());
  }
}

TEST_CASE("constrained solve") {
  const std::vector<UncertainParam> fixed{expand_param("tread", kHermite, 0.2, 0.0, -1),
                                          expand_param("radius_right", kHermite, 0.2, 0.0, -1),
                                          expand_param("radius_left", kHermite, 0.2, 0.0, -1)};
  const auto model = std::make_shared<GpcModel>(GpcModel::build(std::make_shared<UnicycleModel>(), fixed, 0, 1));
  const GpcEulerDynamics dyn(model, 0.05);
  QuadraticCost cost;
  cost.state_weight = Eigen::Vector3d(0.1, 0.1, 0.01).asDiagonal();
  cost.control_weight = 0.001 * Eigen::MatrixXd::Identity(2, 2);
  cost.terminal_weight = Eigen::Vector3d(100, 100, 1).asDiagonal();
  cost.targets = {Eigen::Vector3d(2, 0, 0)};
  ConstrainedProblem prob;
  prob.dynamics = &dyn;
  prob.cost = &cost;
  prob.x0 = Eigen::Vector3d::Zero();
  prob.limits = BoxLimits(Eigen::Vector2d::Constant(-50), Eigen::Vector2d::Constant(50));
  const std::vector<Eigen::VectorXd> u0(30, Eigen::Vector2d(5.0, 5.0));
  AlOptions al;
  DdpOptions ddp;

  SUBCASE("no obstacles equals the plain solve") {
    const ConstrainedResult c = solve_constrained(prob, u0, al, ddp);
    const DdpResult d = solve(dyn, cost, prob.x0, u0, prob.limits, ddp);
    CHECK(std::abs(c.cost - d.cost) <= 1e-10);
  }
  SUBCASE("obstacle on the straight line is avoided") {
    prob.obstacles = {CircleObstacle{Eigen::Vector2d(1.0, 0.05), 0.3}};
    const ConstrainedResult c = solve_constrained(prob, u0, al, ddp);
    CHECK(c.converged);
    CHECK(c.constraint_values.maxCoeff() <= 1e-3);
    for (const auto& u : c.trajectory.controls) CHECK(prob.limits->contains(u));
    // feasibility at exit
    if (c.converged) CHECK(c.constraint_values.maxCoeff() < al.tolerance);
    for (std::size_t i = 1; i < c.violation_history.size(); ++i) CHECK(c.violation_history[i] >= 0.0);
  }
  SUBCASE("incomplete problem") {
    ConstrainedProblem empty;
    CHECK_THROWS_AS(solve_constrained(empty, u0, al, ddp), std::invalid_argument);
  }
}
