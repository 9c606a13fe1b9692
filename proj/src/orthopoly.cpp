#include "gpcddp/orthopoly.hpp"

#include <functional>

namespace gpcddp {

std::string_view family_name(PolyFamily family) {
  switch (family) {
    case PolyFamily::HermiteProbabilists: return "hermite";
    case PolyFamily::LegendreUniform: return "legendre";
    case PolyFamily::Jacobi: return "jacobi";
    case PolyFamily::Laguerre: return "laguerre";
  }
  return "unknown";
}

PolyFamily parse_family(std::string_view name) {
  if (name == "hermite" || name == "gaussian" || name == "normal") return PolyFamily::HermiteProbabilists;
  if (name == "legendre" || name == "uniform") return PolyFamily::LegendreUniform;
  if (name == "jacobi" || name == "beta") return PolyFamily::Jacobi;
  if (name == "laguerre" || name == "gamma") return PolyFamily::Laguerre;
  throw std::invalid_argument("unknown polynomial family '" + std::string(name) + "'");
}

QuadratureRule tensor_rule(const std::vector<UnivariateRule<double>>& rules) {
  if (rules.empty()) throw std::invalid_argument("tensor_rule: no univariate rules");
  const int dim = static_cast<int>(rules.size());
  long long total = 1;
  for (const auto& r : rules) {
    if (r.nodes.size() != r.weights.size() || r.nodes.size() == 0)
      throw std::invalid_argument("tensor_rule: malformed univariate rule");
    total *= r.nodes.size();
    if (total > std::numeric_limits<int>::max())
      throw std::overflow_error("tensor_rule: too many nodes");
  }

  QuadratureRule out;
  out.dim = dim;
  out.nodes.resize(total, dim);
  out.weights.resize(total);
  std::vector<int> counter(dim, 0);
  for (long long q = 0; q < total; ++q) {
    double w = 1.0;
    for (int k = 0; k < dim; ++k) {
      out.nodes(q, k) = rules[k].nodes(counter[k]);
      w *= rules[k].weights(counter[k]);
    }
    out.weights(q) = w;
    for (int k = dim - 1; k >= 0; --k) {
      if (++counter[k] < rules[k].nodes.size()) break;
      counter[k] = 0;
    }
  }
  return out;
}

QuadratureRule tensor_gauss_rule(const std::vector<PolyFamily>& families, int q) {
  std::vector<UnivariateRule<double>> rules;
  rules.reserve(families.size());
  for (auto f : families) rules.push_back(gauss_rule<double>(f, q));
  return tensor_rule(rules);
}

int basis_count(int dim, int order) {
  if (dim < 1) throw std::invalid_argument("basis_count: dimension must be >= 1");
  if (order < 0) throw std::invalid_argument("basis_count: order must be >= 0");
  // C(order + dim, dim) built incrementally; each partial product is itself a
  // binomial coefficient so the division is exact.
  long long c = 1;
  const int k = std::min(dim, order);
  const long long n = static_cast<long long>(order) + dim;
  for (int i = 1; i <= k; ++i) {
    const long long num = n - k + i;
    if (c > std::numeric_limits<long long>::max() / num)
      throw std::overflow_error("basis_count: overflow");
    c = c * num / i;
    if (c > std::numeric_limits<int>::max())
      throw std::overflow_error("basis_count: (r+d)!/(r!d!) exceeds int range");
  }
  return static_cast<int>(c);
}

BasisSet build_basis(const std::vector<PolyFamily>& families, int order) {
  const int dim = static_cast<int>(families.size());
  const int count = basis_count(dim, order);
  for (auto f : families)
    if (f != PolyFamily::HermiteProbabilists && f != PolyFamily::LegendreUniform)
      detail::unsupported_family(f);

  BasisSet basis;
  basis.dim = dim;
  basis.order = order;
  basis.families = families;
  basis.indices.reserve(count);

  MultiIndex current(dim, 0);
  // fill positions [pos, dim) with exactly `remaining` total degree
  std::function<void(int, int)> emit = [&](int pos, int remaining) {
    if (pos == dim - 1) {
      current[pos] = remaining;
      basis.indices.push_back(current);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      current[pos] = e;
      emit(pos + 1, remaining - e);
    }
    current[pos] = 0;
  };
  for (int degree = 0; degree <= order; ++degree) emit(0, degree);

  basis.norms.resize(count);
  for (int j = 0; j < count; ++j) {
    double g = 1.0;
    for (int k = 0; k < dim; ++k) g *= univariate_norm<double>(families[k], basis.indices[j][k]);
    basis.norms(j) = g;
  }
  return basis;
}

double BasisSet::eval(int j, const Eigen::Ref<const Eigen::VectorXd>& xi) const {
  if (j < 0 || j >= count()) throw std::out_of_range("BasisSet::eval: index out of range");
  if (xi.size() != dim) throw std::invalid_argument("BasisSet::eval: dimension mismatch");
  double v = 1.0;
  for (int k = 0; k < dim; ++k) v *= eval_univariate<double>(families[k], indices[j][k], xi(k));
  return v;
}

Eigen::VectorXd BasisSet::eval_all(const Eigen::Ref<const Eigen::VectorXd>& xi) const {
  if (xi.size() != dim) throw std::invalid_argument("BasisSet::eval_all: dimension mismatch");
  std::vector<Eigen::VectorXd> uni(dim);
  for (int k = 0; k < dim; ++k) uni[k] = eval_univariate_all<double>(families[k], order, xi(k));
  Eigen::VectorXd out(count());
  for (int j = 0; j < count(); ++j) {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= uni[k](indices[j][k]);
    out(j) = v;
  }
  return out;
}

}  // namespace gpcddp
