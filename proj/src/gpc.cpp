#include "gpcddp/gpc.hpp"

#include <algorithm>
#include <stdexcept>

namespace gpcddp {

UncertainParam expand_param(std::string name, PolyFamily family, double center, double spread, int dim) {
  if (spread < 0.0) throw std::invalid_argument("expand_param: negative spread for '" + name + "'");
  if (dim < 0 && spread != 0.0)
    throw std::invalid_argument("expand_param: '" + name + "' has a spread but no random dimension");
  return UncertainParam{std::move(name), family, center, spread, dim};
}

Eigen::VectorXd lift_state(const Eigen::VectorXd& x, int terms) {
  if (terms < 1) throw std::invalid_argument("lift_state: need at least one term");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size() * terms);
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i * terms) = x(i);
  return out;
}

Eigen::VectorXd mean(const Eigen::VectorXd& coeffs, int terms) {
  return coefficients(coeffs, terms).row(0).transpose();
}

Eigen::MatrixXd covariance(const Eigen::VectorXd& coeffs, const BasisSet& basis) {
  const int terms = basis.count();
  if (coeffs.size() % terms != 0) throw std::invalid_argument("covariance: size is not a multiple of K+1");
  const auto c = coefficients(coeffs, terms);
  const auto higher = c.bottomRows(terms - 1);
  const Eigen::MatrixXd cov = higher.transpose() * basis.norms.tail(terms - 1).asDiagonal() * higher;
  return 0.5 * (cov + cov.transpose());
}

Eigen::VectorXd eval_realization(const Eigen::VectorXd& coeffs, const BasisSet& basis,
                                 const Eigen::Ref<const Eigen::VectorXd>& xi) {
  return coefficients(coeffs, basis.count()).transpose() * basis.eval_all(xi);
}

Eigen::MatrixXd sample_xi(const BasisSet& basis, int count, std::mt19937_64& rng) {
  Eigen::MatrixXd out(count, basis.dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  for (int s = 0; s < count; ++s) {
    for (int k = 0; k < basis.dim; ++k) {
      switch (basis.families[k]) {
        case PolyFamily::HermiteProbabilists: out(s, k) = normal(rng); break;
        case PolyFamily::LegendreUniform: out(s, k) = uniform(rng); break;
        default: detail::unsupported_family(basis.families[k]);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

GpcModel::GpcModel(std::shared_ptr<const DynamicsModel> model, BasisSet basis, QuadratureRule quad,
                   std::vector<UncertainParam> params)
    : model_(std::move(model)), basis_(std::move(basis)), quad_(std::move(quad)), params_(std::move(params)) {
  if (!model_) throw std::invalid_argument("GpcModel: null dynamics");
  if (quad_.dim != basis_.dim) throw std::invalid_argument("GpcModel: quadrature and basis dimensions differ");
  if (static_cast<int>(params_.size()) != model_->param_dim())
    throw std::invalid_argument("GpcModel: expected " + std::to_string(model_->param_dim()) + " parameters for " +
                                model_->name());
  for (const auto& p : params_) {
    if (p.dim >= basis_.dim) throw std::invalid_argument("GpcModel: parameter '" + p.name + "' dimension out of range");
    if (p.dim >= 0 && p.family != basis_.families[p.dim])
      throw std::invalid_argument("GpcModel: parameter '" + p.name + "' family differs from its basis dimension");
  }

  const int q = quad_.size();
  node_basis_.resize(q, basis_.count());
  node_params_.resize(q, static_cast<Eigen::Index>(params_.size()));
  for (int s = 0; s < q; ++s) {
    const Eigen::VectorXd xi = quad_.nodes.row(s).transpose();
    node_basis_.row(s) = basis_.eval_all(xi).transpose();
    for (std::size_t p = 0; p < params_.size(); ++p) node_params_(s, static_cast<Eigen::Index>(p)) = params_[p].realize(xi);
  }
  weighted_basis_ = quad_.weights.asDiagonal() * node_basis_;
  node_params_t_ = node_params_.transpose();
}

GpcModel GpcModel::build(std::shared_ptr<const DynamicsModel> model, std::vector<UncertainParam> params, int order,
                         int nodes_per_dim) {
  int dim = 0;
  for (const auto& p : params) dim = std::max(dim, p.dim + 1);
  std::vector<PolyFamily> families(std::max(dim, 1), PolyFamily::HermiteProbabilists);
  std::vector<bool> seen(families.size(), false);
  for (const auto& p : params) {
    if (p.dim < 0) continue;
    if (seen[p.dim] && families[p.dim] != p.family)
      throw std::invalid_argument("GpcModel::build: conflicting families in dimension " + std::to_string(p.dim));
    families[p.dim] = p.family;
    seen[p.dim] = true;
  }
  BasisSet basis = build_basis(families, order);
  QuadratureRule quad = tensor_gauss_rule(families, nodes_per_dim);
  return GpcModel(std::move(model), std::move(basis), std::move(quad), std::move(params));
}

Eigen::VectorXd GpcModel::rhs(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& u) const {
  const int t = terms(), n = physical_dim(), q = quad_.size();
  if (coeffs.size() != n * t) throw std::invalid_argument("GpcModel::rhs: coefficient vector has wrong size");
  // node values are stored transposed so each node is a contiguous column
  const Eigen::MatrixXd states = coefficients(coeffs, t).transpose().lazyProduct(node_basis_.transpose());  // n x Q
  Eigen::MatrixXd f(n, q);
  for (int s = 0; s < q; ++s) model_->evaluate(states.col(s), u, node_params_t_.col(s), f.col(s));
  Eigen::VectorXd out(n * t);
  Eigen::Map<Eigen::MatrixXd> out_c(out.data(), t, n);
  out_c.noalias() = weighted_basis_.transpose().lazyProduct(f.transpose());
  out_c.array().colwise() /= basis_.norms.array();
  return out;
}

void GpcModel::jacobian(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& u, Eigen::MatrixXd& a,
                        Eigen::MatrixXd& b) const {
  const int t = terms(), n = physical_dim(), m = control_dim(), q = quad_.size();
  if (coeffs.size() != n * t) throw std::invalid_argument("GpcModel::jacobian: coefficient vector has wrong size");
  const Eigen::MatrixXd states = coefficients(coeffs, t).transpose().lazyProduct(node_basis_.transpose());

  // per-node partials, column (i + g * n) of fx_nodes holds df_i/dx_g over the nodes
  Eigen::MatrixXd fx_nodes(q, n * n), fu_nodes(q, n * m);
  Eigen::MatrixXd fx(n, n), fu(n, m);
  for (int s = 0; s < q; ++s) {
    model_->partials(states.col(s), u, node_params_t_.col(s), fx, fu);
    fx_nodes.row(s) = Eigen::Map<const Eigen::RowVectorXd>(fx.data(), n * n);
    fu_nodes.row(s) = Eigen::Map<const Eigen::RowVectorXd>(fu.data(), n * m);
  }

  a.setZero(n * t, n * t);
  b.setZero(n * t, m);
  const Eigen::ArrayXd inv_norms = basis_.norms.array().inverse();
  Eigen::MatrixXd scaled(q, t);
  for (int g = 0; g < n; ++g) {
    for (int i = 0; i < n; ++i) {
      const auto d = fx_nodes.col(i + g * n);
      if ((d.array() == 0.0).all()) continue;
      scaled = node_basis_.array().colwise() * d.array();
      auto block = a.block(i * t, g * t, t, t);
      block.noalias() = weighted_basis_.transpose() * scaled;
      block.array().colwise() *= inv_norms;
    }
  }
  for (int k = 0; k < m; ++k) {
    for (int i = 0; i < n; ++i) {
      auto col = b.block(i * t, k, t, 1);
      col.noalias() = weighted_basis_.transpose() * fu_nodes.col(i + k * n);
      col.array() *= inv_norms;
    }
  }
}

// ---------------------------------------------------------------------------

GpcEulerDynamics::GpcEulerDynamics(std::shared_ptr<const GpcModel> model, double dt)
    : model_(std::move(model)), dt_(dt) {
  if (!model_) throw std::invalid_argument("GpcEulerDynamics: null model");
  if (!(dt > 0.0)) throw std::invalid_argument("GpcEulerDynamics: dt must be positive");
}

Eigen::VectorXd GpcEulerDynamics::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  return euler_step([this](const auto& xx, const auto& uu) { return model_->rhs(xx, uu); }, x, u, dt_);
}

void GpcEulerDynamics::linearize(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::MatrixXd& fx,
                                 Eigen::MatrixXd& fu) const {
  model_->jacobian(x, u, fx, fu);
  fx *= dt_;
  fx.diagonal().array() += 1.0;
  fu *= dt_;
}

}  // namespace gpcddp
