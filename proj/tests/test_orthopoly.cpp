#include "gpcddp/orthopoly.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace gpcddp;

namespace {
const PolyFamily kHermite = PolyFamily::HermiteProbabilists;
const PolyFamily kLegendre = PolyFamily::LegendreUniform;

long long binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}
}  // namespace

TEST_CASE("univariate polynomials") {
  CHECK(eval_univariate(kHermite, 2, 1.0) == doctest::Approx(0.0));
  CHECK(eval_univariate(kLegendre, 2, 1.0) == doctest::Approx(1.0));
  CHECK(eval_univariate(kHermite, 0, 3.7) == 1.0);
  CHECK(eval_univariate(kLegendre, 0, -0.2) == 1.0);
  CHECK(eval_univariate(kHermite, 1, 0.3) == doctest::Approx(0.3));
  CHECK(eval_univariate(kHermite, 3, 2.0) == doctest::Approx(8.0 - 6.0));       // z^3 - 3z
  CHECK(eval_univariate(kLegendre, 2, 0.5) == doctest::Approx(1.5 * 0.25 - 0.5));
  CHECK_THROWS_AS(eval_univariate(kHermite, -1, 0.0), std::invalid_argument);

  const auto all = eval_univariate_all(kLegendre, 6, 0.37);
  for (int n = 0; n <= 6; ++n) CHECK(all(n) == doctest::Approx(eval_univariate(kLegendre, n, 0.37)));
}

TEST_CASE("recurrence matches the explicit forms") {
  for (double z : {-1.3, 0.0, 0.4, 2.2}) {
    for (int n = 0; n <= 10; ++n) {
      double p, dp;
      oracle::hermite(n, z, p, dp);
      CHECK(eval_univariate(kHermite, n, z) == doctest::Approx(p).epsilon(1e-12));
    }
  }
}

TEST_CASE("univariate norms") {
  CHECK(univariate_norm<double>(kHermite, 3) == 6.0);
  CHECK(univariate_norm<double>(kLegendre, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(univariate_norm<double>(kHermite, 0) == 1.0);
  CHECK(univariate_norm<double>(kLegendre, 0) == 1.0);
  CHECK(univariate_norm<double>(kHermite, 5) == 120.0);
}

TEST_CASE("reserved families are rejected") {
  CHECK_THROWS_AS(eval_univariate(PolyFamily::Jacobi, 2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(gauss_rule<double>(PolyFamily::Laguerre, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_basis({PolyFamily::Jacobi}, 1), std::invalid_argument);
  CHECK(parse_family("gaussian") == kHermite);
  CHECK(parse_family("uniform") == kLegendre);
  CHECK_THROWS(parse_family("cauchy"));
}

TEST_CASE("basis construction") {
  SUBCASE("count and graded order") {
    const BasisSet b = build_basis({kHermite, kHermite}, 2);
    REQUIRE(b.count() == 6);
    CHECK(b.truncation() == 5);
    const std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    CHECK(b.indices == expected);
    CHECK(b.norms(0) == 1.0);
    CHECK(b.norms(3) == 2.0);
    CHECK(b.norms(4) == 1.0);
  }
  SUBCASE("three Hermite dimensions, order two") {
    CHECK(build_basis(std::vector<PolyFamily>(3, kHermite), 2).truncation() == 9);
  }
  SUBCASE("constant basis") {
    const BasisSet b = build_basis({kLegendre}, 0);
    CHECK(b.count() == 1);
    CHECK(b.eval(0, Eigen::VectorXd::Constant(1, 0.4)) == 1.0);
  }
  SUBCASE("closed form count for d <= 5, r <= 4") {
    for (int d = 1; d <= 5; ++d) {
      for (int r = 0; r <= 4; ++r) {
        const BasisSet b = build_basis(std::vector<PolyFamily>(static_cast<std::size_t>(d), kHermite), r);
        CHECK(b.count() == binomial(r + d, d));
        std::set<MultiIndex> unique(b.indices.begin(), b.indices.end());
        CHECK(static_cast<int>(unique.size()) == b.count());
        int prev = 0;
        for (const auto& idx : b.indices) {
          CHECK(total_degree(idx) <= r);
          CHECK(total_degree(idx) >= prev);
          prev = total_degree(idx);
        }
      }
    }
  }
  SUBCASE("mixed families multiply univariate norms") {
    const BasisSet b = build_basis({kHermite, kLegendre}, 3);
    for (int j = 0; j < b.count(); ++j) {
      const auto& idx = b.indices[j];
      CHECK(b.norms(j) == doctest::Approx(univariate_norm<double>(kHermite, idx[0]) *
                                          univariate_norm<double>(kLegendre, idx[1])));
    }
  }
  SUBCASE("overflow is rejected") { CHECK_THROWS_AS(basis_count(200, 200), std::overflow_error); }
  SUBCASE("invalid arguments") {
    CHECK_THROWS(build_basis({}, 2));
    CHECK_THROWS(build_basis({kHermite}, -1));
  }
}

TEST_CASE("multivariate evaluation") {
  const BasisSet h = build_basis({kHermite, kHermite}, 2);
  CHECK(h.eval(0, Eigen::Vector2d(0.3, -2.0)) == 1.0);
  CHECK(h.eval(4, Eigen::Vector2d(2.0, 3.0)) == doctest::Approx(6.0));  // index (1,1)
  const BasisSet l = build_basis({kLegendre, kLegendre}, 2);
  CHECK(l.eval(3, Eigen::Vector2d(1.0, 0.5)) == doctest::Approx(1.0));  // index (2,0)
  CHECK_THROWS_AS(h.eval(6, Eigen::Vector2d(0, 0)), std::out_of_range);
  CHECK(eval_multivariate(h, 2, Eigen::Vector2d(0.7, -1.5)) == doctest::Approx(-1.5));
}

TEST_CASE("gauss rules: small cases") {
  const auto h1 = gauss_rule<double>(kHermite, 1);
  CHECK(h1.nodes(0) == 0.0);
  CHECK(h1.weights(0) == 1.0);

  const auto h2 = gauss_rule<double>(kHermite, 2);
  CHECK(h2.nodes(0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(h2.nodes(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(h2.weights(0) == doctest::Approx(0.5).epsilon(1e-14));
  // z^2 against N(0,1)
  CHECK(h2.weights.dot(h2.nodes.array().square().matrix()) == doctest::Approx(1.0).epsilon(1e-14));

  const auto l2 = gauss_rule<double>(kLegendre, 2);
  CHECK(l2.nodes(0) == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(l2.nodes(1) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(l2.weights(1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS(gauss_rule<double>(kHermite, 0));
}

TEST_CASE("gauss rules agree with root-finding oracle") {
  for (int q = 1; q <= 12; ++q) {
    const auto gh = gauss_rule<double>(kHermite, q);
    const auto oh = oracle::hermite_rule(q);
    const auto gl = gauss_rule<double>(kLegendre, q);
    const auto ol = oracle::legendre_rule(q);
    for (int i = 0; i < q; ++i) {
      CHECK(gh.nodes(i) == doctest::Approx(oh.nodes[i]).epsilon(1e-12));
      CHECK(gh.weights(i) == doctest::Approx(oh.weights[i]).epsilon(1e-10));
      CHECK(gl.nodes(i) == doctest::Approx(ol.nodes[i]).epsilon(1e-12));
      CHECK(gl.weights(i) == doctest::Approx(ol.weights[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("gauss rules: exactness, positivity, normalization") {
  for (PolyFamily f : {kHermite, kLegendre}) {
    for (int q = 1; q <= 8; ++q) {
      const auto rule = gauss_rule<double>(f, q);
      CHECK((rule.weights.array() > 0.0).all());
      CHECK(std::abs(rule.weights.sum() - 1.0) <= 1e-12);
      for (int i = 1; i < q; ++i) CHECK(rule.nodes(i) > rule.nodes(i - 1));
      for (int n = 0; n <= 2 * q - 1; ++n) {
        double sum = 0.0;
        for (int i = 0; i < q; ++i) sum += rule.weights(i) * std::pow(rule.nodes(i), n);
        const double exact = f == kHermite ? oracle::gaussian_moment(n) : oracle::uniform_moment(n);
        CHECK(std::abs(sum - exact) <= 1e-11 * std::max(1.0, exact));
      }
    }
  }
}

TEST_CASE("long double instantiation") {
  const auto rule = gauss_rule<long double>(kLegendre, 5);
  long double sum = 0;
  for (int i = 0; i < 5; ++i) sum += rule.weights(i) * std::pow(rule.nodes(i), 8);
  CHECK(static_cast<double>(sum) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("tensor rules") {
  SUBCASE("two 2-node Hermite rules") {
    const QuadratureRule t = tensor_gauss_rule({kHermite, kHermite}, 2);
    REQUIRE(t.size() == 4);
    for (int s = 0; s < 4; ++s) {
      CHECK(std::abs(t.nodes(s, 0)) == doctest::Approx(1.0));
      CHECK(std::abs(t.nodes(s, 1)) == doctest::Approx(1.0));
      CHECK(t.weights(s) == doctest::Approx(0.25));
    }
  }
  SUBCASE("single dimension is the univariate rule") {
    const QuadratureRule t = tensor_gauss_rule({kLegendre}, 5);
    const auto u = gauss_rule<double>(kLegendre, 5);
    CHECK((t.nodes.col(0) - u.nodes).cwiseAbs().maxCoeff() == 0.0);
    CHECK((t.weights - u.weights).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("three dimensions, three nodes") {
    const QuadratureRule t = tensor_gauss_rule({kHermite, kLegendre, kHermite}, 3);
    CHECK(t.size() == 27);
    CHECK(std::abs(t.weights.sum() - 1.0) <= 1e-12);
  }
  SUBCASE("mixed node counts") {
    const QuadratureRule t = tensor_rule({gauss_rule<double>(kHermite, 2), gauss_rule<double>(kLegendre, 3)});
    CHECK(t.size() == 6);
    CHECK(t.dim == 2);
  }
}

TEST_CASE("orthogonality over quadrature") {
  for (PolyFamily f : {kHermite, kLegendre}) {
    for (int d = 1; d <= 3; ++d) {
      for (int r = 0; r <= 3; ++r) {
        const std::vector<PolyFamily> fams(static_cast<std::size_t>(d), f);
        const BasisSet b = build_basis(fams, r);
        const QuadratureRule q = tensor_gauss_rule(fams, r + 1);
        Eigen::MatrixXd phi(q.size(), b.count());
        for (int s = 0; s < q.size(); ++s) phi.row(s) = b.eval_all(q.nodes.row(s).transpose()).transpose();
        const Eigen::MatrixXd gram = phi.transpose() * q.weights.asDiagonal() * phi;
        CHECK((gram - Eigen::MatrixXd(b.norms.asDiagonal())).cwiseAbs().maxCoeff() <= 1e-10);
      }
    }
  }
}
