#pragma once

// Polynomial chaos representation of uncertain states.
//
// A GpcVector is a plain Eigen::VectorXd of length n * (K + 1) laid out state
// major: (x_10, ..., x_1K, x_20, ..., x_nK). Coefficient (i, 0) is the mean of
// state i.

#include "gpcddp/ddp.hpp"
#include "gpcddp/models.hpp"
#include "gpcddp/orthopoly.hpp"

#include <Eigen/Dense>

#include <memory>
#include <random>
#include <string>
#include <vector>

namespace gpcddp {

/// First-order expansion center + spread * xi_dim. A negative dim marks a
/// parameter that is not uncertain (spread must then be zero).
struct UncertainParam {
  std::string name;
  PolyFamily family = PolyFamily::HermiteProbabilists;
  double center = 0.0;
  double spread = 0.0;
  int dim = -1;

  double realize(const Eigen::Ref<const Eigen::VectorXd>& xi) const {
    return dim < 0 ? center : center + spread * xi(dim);
  }
};

UncertainParam expand_param(std::string name, PolyFamily family, double center, double spread, int dim);

inline int state_count(const Eigen::VectorXd& x, int terms) { return static_cast<int>(x.size()) / terms; }

/// (K+1) x n view of the coefficients; column i holds the modes of state i.
inline Eigen::Map<const Eigen::MatrixXd> coefficients(const Eigen::VectorXd& x, int terms) {
  return {x.data(), terms, x.size() / terms};
}
inline Eigen::Map<Eigen::MatrixXd> coefficients(Eigen::VectorXd& x, int terms) {
  return {x.data(), terms, x.size() / terms};
}

Eigen::VectorXd lift_state(const Eigen::VectorXd& x, int terms);
Eigen::VectorXd mean(const Eigen::VectorXd& coeffs, int terms);
Eigen::MatrixXd covariance(const Eigen::VectorXd& coeffs, const BasisSet& basis);
Eigen::VectorXd eval_realization(const Eigen::VectorXd& coeffs, const BasisSet& basis,
                                 const Eigen::Ref<const Eigen::VectorXd>& xi);

/// Draws `count` samples of xi (count x d) from the basis densities.
Eigen::MatrixXd sample_xi(const BasisSet& basis, int count, std::mt19937_64& rng);

/// Galerkin-projected dynamics of the coefficients. Basis values and parameter
/// realizations at every quadrature node are tabulated at construction.
class GpcModel {
 public:
  GpcModel(std::shared_ptr<const DynamicsModel> model, BasisSet basis, QuadratureRule quad,
           std::vector<UncertainParam> params);

  /// Uses one dimension per parameter with dim >= 0, order r and q nodes per dimension.
  static GpcModel build(std::shared_ptr<const DynamicsModel> model, std::vector<UncertainParam> params, int order,
                        int nodes_per_dim);

  const DynamicsModel& dynamics() const { return *model_; }
  const std::shared_ptr<const DynamicsModel>& dynamics_ptr() const { return model_; }
  const BasisSet& basis() const { return basis_; }
  const QuadratureRule& quadrature() const { return quad_; }
  const std::vector<UncertainParam>& params() const { return params_; }
  int physical_dim() const { return model_->state_dim(); }
  int control_dim() const { return model_->control_dim(); }
  int terms() const { return basis_.count(); }
  int coeff_dim() const { return physical_dim() * terms(); }

  /// Q x (K+1) table of Phi_j at the quadrature nodes.
  const Eigen::MatrixXd& node_basis() const { return node_basis_; }
  /// Q x p table of parameter realizations at the quadrature nodes.
  const Eigen::MatrixXd& node_params() const { return node_params_; }

  Eigen::VectorXd lift(const Eigen::VectorXd& x) const { return lift_state(x, terms()); }
  Eigen::VectorXd mean_of(const Eigen::VectorXd& coeffs) const { return mean(coeffs, terms()); }
  Eigen::MatrixXd covariance_of(const Eigen::VectorXd& coeffs) const { return covariance(coeffs, basis_); }

  Eigen::VectorXd rhs(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& u) const;
  void jacobian(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& u, Eigen::MatrixXd& a,
                Eigen::MatrixXd& b) const;

 private:
  std::shared_ptr<const DynamicsModel> model_;
  BasisSet basis_;
  QuadratureRule quad_;
  std::vector<UncertainParam> params_;
  Eigen::MatrixXd node_basis_;
  Eigen::MatrixXd node_params_;
  Eigen::MatrixXd node_params_t_;  // p x Q
  Eigen::MatrixXd weighted_basis_;  // diag(w) * node_basis_, columns scaled by 1 / gamma_j
};

inline Eigen::VectorXd galerkin_rhs(const GpcModel& model, const Eigen::VectorXd& coeffs, const Eigen::VectorXd& u) {
  return model.rhs(coeffs, u);
}

/// Euler-discretized coefficient dynamics for the DDP solver.
class GpcEulerDynamics final : public DiscreteDynamics {
 public:
  GpcEulerDynamics(std::shared_ptr<const GpcModel> model, double dt);

  const GpcModel& model() const { return *model_; }
  double dt() const { return dt_; }

  int state_dim() const override { return model_->coeff_dim(); }
  int control_dim() const override { return model_->control_dim(); }
  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const override;
  void linearize(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::MatrixXd& fx,
                 Eigen::MatrixXd& fu) const override;

 private:
  std::shared_ptr<const GpcModel> model_;
  double dt_;
};

}  // namespace gpcddp
