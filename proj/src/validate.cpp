#include "gpcddp/validate.hpp"

#include "gpcddp/constraints.hpp"
#include "gpcddp/ddp.hpp"
#include "gpcddp/gpc.hpp"
#include "gpcddp/models.hpp"
#include "gpcddp/orthopoly.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gpcddp {

namespace {

double gaussian_moment(int n) {
  if (n % 2) return 0.0;
  double m = 1.0;
  for (int k = n - 1; k > 1; k -= 2) m *= k;
  return m;
}

double uniform_moment(int n) { return n % 2 ? 0.0 : 1.0 / (n + 1); }

CheckResult finish(std::string name, double error, double tol) {
  return {std::move(name), error <= tol, error, tol};
}

}  // namespace

CheckResult check_quadrature_exactness() {
  double worst = 0.0;
  for (PolyFamily f : {PolyFamily::HermiteProbabilists, PolyFamily::LegendreUniform}) {
    for (int q = 1; q <= 8; ++q) {
      const auto rule = gauss_rule<double>(f, q);
      for (int deg = 0; deg <= 2 * q - 1; ++deg) {
        double sum = 0.0;
        for (int i = 0; i < q; ++i) sum += rule.weights(i) * std::pow(rule.nodes(i), deg);
        const double exact = f == PolyFamily::HermiteProbabilists ? gaussian_moment(deg) : uniform_moment(deg);
        worst = std::max(worst, std::abs(sum - exact) / std::max(1.0, std::abs(exact)));
      }
    }
  }
  return finish("quadrature exactness", worst, 1e-11);
}

CheckResult check_orthogonality() {
  double worst = 0.0;
  for (PolyFamily f : {PolyFamily::HermiteProbabilists, PolyFamily::LegendreUniform}) {
    for (int d = 1; d <= 3; ++d) {
      for (int r = 0; r <= 3; ++r) {
        const std::vector<PolyFamily> fams(static_cast<std::size_t>(d), f);
        const BasisSet basis = build_basis(fams, r);
        const QuadratureRule rule = tensor_gauss_rule(fams, r + 1);
        Eigen::MatrixXd phi(rule.size(), basis.count());
        for (int s = 0; s < rule.size(); ++s) phi.row(s) = basis.eval_all(rule.nodes.row(s).transpose()).transpose();
        const Eigen::MatrixXd gram = phi.transpose() * rule.weights.asDiagonal() * phi;
        worst = std::max(worst, (gram - Eigen::MatrixXd(basis.norms.asDiagonal())).cwiseAbs().maxCoeff());
      }
    }
  }
  return finish("basis orthogonality", worst, 1e-10);
}

CheckResult check_moments(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const BasisSet basis = build_basis({PolyFamily::HermiteProbabilists, PolyFamily::LegendreUniform}, 2);
  const int n = 3;
  Eigen::VectorXd x(n * basis.count());
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  const int samples = 100000;
  const Eigen::MatrixXd xi = sample_xi(basis, samples, rng);
  Eigen::MatrixXd z(samples, n);
  for (int s = 0; s < samples; ++s) z.row(s) = eval_realization(x, basis, xi.row(s).transpose()).transpose();
  const Eigen::RowVectorXd mc_mean = z.colwise().mean();
  const Eigen::MatrixXd centered = z.rowwise() - mc_mean;
  const Eigen::MatrixXd mc_cov = centered.transpose() * centered / (samples - 1);
  const Eigen::MatrixXd cov = covariance(x, basis);
  const double cov_err = (mc_cov - cov).norm() / cov.norm();
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  const double mean_err =
      ((mc_mean.transpose() - mean(x, basis.count())).array() / (sd.array() / std::sqrt(samples))).abs().maxCoeff();
  // mean within 4 standard errors, covariance within 2% Frobenius
  return finish("moment formulas vs Monte Carlo", std::max(cov_err / 0.02, mean_err / 4.0), 1.0);
}

CheckResult check_riccati(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 4 + trial, m = 2, horizon = 20;
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd b(n, m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) a(i, j) += 0.1 * normal(rng);
      for (int j = 0; j < m; ++j) b(i, j) = normal(rng);
    }
    QuadraticCost cost;
    cost.state_weight = Eigen::MatrixXd::Identity(n, n);
    cost.control_weight = 0.1 * Eigen::MatrixXd::Identity(m, m);
    cost.terminal_weight = 10.0 * Eigen::MatrixXd::Identity(n, n);
    cost.targets = {Eigen::VectorXd::Zero(n)};
    Eigen::VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0(i) = normal(rng);

    // closed-form finite-horizon Riccati
    Eigen::MatrixXd p = cost.terminal_weight;
    std::vector<Eigen::MatrixXd> gains(horizon);
    for (int k = horizon - 1; k >= 0; --k) {
      const Eigen::MatrixXd s = cost.control_weight + b.transpose() * p * b;
      gains[k] = s.ldlt().solve(b.transpose() * p * a);
      p = cost.state_weight + a.transpose() * p * (a - b * gains[k]);
    }
    const double optimal = 0.5 * x0.dot(p * x0);

    const LinearDiscreteDynamics dyn(a, b);
    DdpResult res = solve(dyn, cost, x0, std::vector<Eigen::VectorXd>(horizon, Eigen::VectorXd::Zero(m)),
                          std::nullopt);
    worst = std::max(worst, std::abs(res.cost - optimal) / std::max(1.0, optimal));
    for (int k = 0; k < horizon; ++k) worst = std::max(worst, (res.policy.feedback[k] + gains[k]).cwiseAbs().maxCoeff());
  }
  return finish("DDP vs Riccati recursion", worst, 1e-7);
}

CheckResult check_jacobians(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double sigma = std::sqrt(1.5e-3);
  std::vector<UncertainParam> params = {
      expand_param("tread", PolyFamily::HermiteProbabilists, 0.2, sigma, 0),
      expand_param("radius_right", PolyFamily::HermiteProbabilists, 0.2, sigma, 1),
      expand_param("radius_left", PolyFamily::HermiteProbabilists, 0.2, sigma, 2)};
  const GpcModel gm = GpcModel::build(make_model("unicycle"), params, 2, 4);
  double worst = 0.0;
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(gm.coeff_dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = (i % gm.terms() == 0 ? 1.0 : 0.1) * unif(rng);
    Eigen::VectorXd u(2);
    u << 5.0 * unif(rng), 5.0 * unif(rng);
    Eigen::MatrixXd a, b;
    gm.jacobian(x, u, a, b);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      worst = std::max(worst, ((gm.rhs(xp, u) - gm.rhs(xm, u)) / (2 * h) - a.col(j)).cwiseAbs().maxCoeff());
    }
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      Eigen::VectorXd up = u, um = u;
      up(j) += h;
      um(j) -= h;
      worst = std::max(worst, ((gm.rhs(x, up) - gm.rhs(x, um)) / (2 * h) - b.col(j)).cwiseAbs().maxCoeff());
    }
  }
  return finish("Galerkin Jacobian vs finite differences", worst, 1e-5);
}

CheckResult check_constraint_gradients(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const BasisSet basis = build_basis(std::vector<PolyFamily>(3, PolyFamily::HermiteProbabilists), 2);
  const std::vector<int> dims{0, 1};
  const CircleObstacle obs{Eigen::Vector2d(0.3, -0.2), 0.35};
  double worst = 0.0;
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(3 * basis.count());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = (i % basis.count() == 0 ? 1.0 : 0.2) * unif(rng);
    const double s = 5.991;
    const ConstraintEval ce = obstacle_constraint(x, basis, obs, s, dims);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      const double fd = (obstacle_constraint(xp, basis, obs, s, dims).value -
                         obstacle_constraint(xm, basis, obs, s, dims).value) /
                        (2 * h);
      worst = std::max(worst, std::abs(fd - ce.grad(j)));
    }
  }
  return finish("chance constraint gradient vs finite differences", worst, 1e-5);
}

std::vector<CheckResult> run_validation(std::uint64_t seed) {
  return {check_quadrature_exactness(), check_orthogonality(), check_moments(seed), check_riccati(seed),
          check_jacobians(seed), check_constraint_gradients(seed)};
}

}  // namespace gpcddp
