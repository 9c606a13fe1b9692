#pragma once

// Univariate orthogonal polynomial families, truncated multivariate bases and
// Golub-Welsch Gauss rules. Every family here is orthogonal with respect to a
// probability density, so the constant polynomial has unit norm and quadrature
// weights sum to one.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gpcddp {

enum class PolyFamily {
  HermiteProbabilists,  // xi ~ N(0, 1)
  LegendreUniform,      // xi ~ U(-1, 1), density 1/2
  Jacobi,               // reserved
  Laguerre,             // reserved
};

std::string_view family_name(PolyFamily family);
PolyFamily parse_family(std::string_view name);

namespace detail {
[[noreturn]] inline void unsupported_family(PolyFamily family) {
  throw std::invalid_argument("polynomial family '" + std::string(family_name(family)) +
                              "' is reserved but not implemented");
}
}  // namespace detail

/// Three-term recurrence in the form
///   phi_{n+1}(z) = (a_n z + b_n) phi_n(z) - c_n phi_{n-1}(z).
template <typename Scalar = double>
struct Recurrence {
  Scalar a, b, c;
};

template <typename Scalar = double>
Recurrence<Scalar> recurrence(PolyFamily family, int n) {
  switch (family) {
    case PolyFamily::HermiteProbabilists:
      return {Scalar(1), Scalar(0), Scalar(n)};
    case PolyFamily::LegendreUniform:
      return {Scalar(2 * n + 1) / Scalar(n + 1), Scalar(0), Scalar(n) / Scalar(n + 1)};
    default:
      detail::unsupported_family(family);
  }
}

template <typename Scalar = double>
Scalar eval_univariate(PolyFamily family, int degree, Scalar z) {
  if (degree < 0) throw std::invalid_argument("eval_univariate: negative degree");
  if (family != PolyFamily::HermiteProbabilists && family != PolyFamily::LegendreUniform)
    detail::unsupported_family(family);
  Scalar prev(1);
  if (degree == 0) return prev;
  Scalar cur = z;
  for (int n = 1; n < degree; ++n) {
    const auto rc = recurrence<Scalar>(family, n);
    const Scalar next = (rc.a * z + rc.b) * cur - rc.c * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Values phi_0(z) .. phi_max_degree(z) in one sweep.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eval_univariate_all(PolyFamily family, int max_degree,
                                                              Scalar z) {
  if (max_degree < 0) throw std::invalid_argument("eval_univariate_all: negative degree");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(max_degree + 1);
  out(0) = Scalar(1);
  if (max_degree >= 1) {
    if (family != PolyFamily::HermiteProbabilists && family != PolyFamily::LegendreUniform)
      detail::unsupported_family(family);
    out(1) = z;
  }
  for (int n = 1; n < max_degree; ++n) {
    const auto rc = recurrence<Scalar>(family, n);
    out(n + 1) = (rc.a * z + rc.b) * out(n) - rc.c * out(n - 1);
  }
  return out;
}

/// <phi_n, phi_n> under the family's probability density.
template <typename Scalar = double>
Scalar univariate_norm(PolyFamily family, int degree) {
  if (degree < 0) throw std::invalid_argument("univariate_norm: negative degree");
  switch (family) {
    case PolyFamily::HermiteProbabilists: {
      // n! accumulated in integers while exact
      std::uint64_t fact = 1;
      int n = 1;
      for (; n <= degree && n <= 20; ++n) fact *= static_cast<std::uint64_t>(n);
      Scalar out = Scalar(fact);
      for (; n <= degree; ++n) out *= Scalar(n);
      return out;
    }
    case PolyFamily::LegendreUniform:
      return Scalar(1) / Scalar(2 * degree + 1);
    default:
      detail::unsupported_family(family);
  }
}

// ---------------------------------------------------------------------------
// Gauss rules

template <typename Scalar = double>
struct UnivariateRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

/// Golub-Welsch: nodes are the eigenvalues of the symmetric Jacobi matrix of
/// the monic recurrence, weights the squared first eigenvector components.
template <typename Scalar = double>
UnivariateRule<Scalar> gauss_rule(PolyFamily family, int q) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (q < 1) throw std::invalid_argument("gauss_rule: need at least one node");
  if (family != PolyFamily::HermiteProbabilists && family != PolyFamily::LegendreUniform)
    detail::unsupported_family(family);

  Vec diag = Vec::Zero(q);
  Vec offdiag = Vec::Zero(std::max(q - 1, 0));
  for (int n = 1; n < q; ++n) {
    // monic recurrence coefficient beta_n
    Scalar beta;
    switch (family) {
      case PolyFamily::HermiteProbabilists:
        beta = Scalar(n);
        break;
      case PolyFamily::LegendreUniform:
        beta = Scalar(n) * Scalar(n) / (Scalar(4) * Scalar(n) * Scalar(n) - Scalar(1));
        break;
      default:
        detail::unsupported_family(family);
    }
    offdiag(n - 1) = std::sqrt(beta);
  }

  UnivariateRule<Scalar> rule;
  if (q == 1) {
    rule.nodes = Vec::Zero(1);
    rule.weights = Vec::Ones(1);
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Mat> solver;
  solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("gauss_rule: tridiagonal eigensolver failed for q=" + std::to_string(q));

  // Eigen returns ascending eigenvalues. Both implemented densities are
  // symmetric, so symmetrize the rule to remove roundoff asymmetry.
  rule.nodes = solver.eigenvalues();
  rule.weights = solver.eigenvectors().row(0).transpose().array().square();
  for (int i = 0; i < q / 2; ++i) {
    const int j = q - 1 - i;
    const Scalar x = (rule.nodes(j) - rule.nodes(i)) / Scalar(2);
    const Scalar w = (rule.weights(i) + rule.weights(j)) / Scalar(2);
    rule.nodes(i) = -x;
    rule.nodes(j) = x;
    rule.weights(i) = rule.weights(j) = w;
  }
  if (q % 2 == 1) rule.nodes(q / 2) = Scalar(0);
  rule.weights /= rule.weights.sum();
  return rule;
}

struct QuadratureRule {
  int dim = 0;
  Eigen::MatrixXd nodes;    // Q x dim
  Eigen::VectorXd weights;  // Q

  int size() const { return static_cast<int>(weights.size()); }
};

/// Cartesian product of univariate rules; the last dimension varies fastest.
QuadratureRule tensor_rule(const std::vector<UnivariateRule<double>>& rules);

/// Tensor Gauss rule with q nodes in every dimension of the given families.
QuadratureRule tensor_gauss_rule(const std::vector<PolyFamily>& families, int q);

// ---------------------------------------------------------------------------
// Truncated multivariate basis

using MultiIndex = std::vector<int>;

inline int total_degree(const MultiIndex& index) {
  int total = 0;
  for (int e : index) total += e;
  return total;
}

/// (r + d)! / (r! d!), throws std::overflow_error past int range.
int basis_count(int dim, int order);

struct BasisSet {
  int dim = 0;
  int order = 0;
  std::vector<MultiIndex> indices;
  std::vector<PolyFamily> families;
  Eigen::VectorXd norms;

  int count() const { return static_cast<int>(indices.size()); }
  /// Index of the last term, i.e. K.
  int truncation() const { return count() - 1; }

  double eval(int j, const Eigen::Ref<const Eigen::VectorXd>& xi) const;
  /// All Phi_j(xi), j = 0..K.
  Eigen::VectorXd eval_all(const Eigen::Ref<const Eigen::VectorXd>& xi) const;
};

/// Graded basis: all multi-indices with |i| <= r, degree ascending, and
/// within one degree in descending lexicographic order, so that for d = 2
/// the order is (0,0), (1,0), (0,1), (2,0), (1,1), (0,2).
BasisSet build_basis(const std::vector<PolyFamily>& families, int order);

inline double eval_multivariate(const BasisSet& basis, int j,
                                const Eigen::Ref<const Eigen::VectorXd>& xi) {
  return basis.eval(j, xi);
}

}  // namespace gpcddp
