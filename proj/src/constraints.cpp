#include "gpcddp/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpcddp {

namespace {
constexpr double kMaxCondition = 1e12;
constexpr double kRidge = 1e-12;
constexpr double kGapScale = 1e-8;
}  // namespace

Eigen::VectorXd position_mean(const Eigen::VectorXd& coeffs, int terms, const std::vector<int>& dims) {
  Eigen::VectorXd out(dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a) out(a) = coeffs(dims[a] * terms);
  return out;
}

Eigen::MatrixXd position_covariance(const Eigen::VectorXd& coeffs, const BasisSet& basis,
                                    const std::vector<int>& dims) {
  const int terms = basis.count();
  const int n = static_cast<int>(coeffs.size()) / terms;
  for (int d : dims)
    if (d < 0 || d >= n) throw std::out_of_range("position_covariance: dimension out of range");
  const auto c = coefficients(coeffs, terms);
  Eigen::MatrixXd pos(terms - 1, dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a) pos.col(a) = c.col(dims[a]).tail(terms - 1);
  Eigen::MatrixXd cov = pos.transpose() * basis.norms.tail(terms - 1).asDiagonal() * pos;
  return 0.5 * (cov + cov.transpose());
}

// ---------------------------------------------------------------------------
// s(p)

ChanceSampler::ChanceSampler(const BasisSet& basis, ChanceSpec spec) : basis_(basis), spec_(std::move(spec)) {
  if (!(spec_.probability > 0.0 && spec_.probability < 1.0))
    throw std::invalid_argument("ChanceSpec: probability must lie in (0, 1)");
  if (spec_.samples < 100) throw std::invalid_argument("ChanceSpec: need at least 100 samples");
  if (spec_.position_dims.empty()) throw std::invalid_argument("ChanceSpec: no position dimensions");
  std::mt19937_64 rng(spec_.seed);
  xi_ = sample_xi(basis_, spec_.samples, rng);
  sample_basis_.resize(spec_.samples, basis_.count());
  for (int s = 0; s < spec_.samples; ++s) sample_basis_.row(s) = basis_.eval_all(xi_.row(s).transpose()).transpose();
}

Eigen::VectorXd ChanceSampler::mahalanobis(const Eigen::VectorXd& coeffs, bool* regularized) const {
  const int terms = basis_.count();
  const auto& dims = spec_.position_dims;
  Eigen::MatrixXd sigma = position_covariance(coeffs, basis_, dims);
  const auto c = coefficients(coeffs, terms);
  Eigen::MatrixXd pos_coeffs(terms - 1, dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a) pos_coeffs.col(a) = c.col(dims[a]).tail(terms - 1);
  // deviation from the mean: only the non-constant modes contribute
  const Eigen::MatrixXd dev = sample_basis_.rightCols(terms - 1) * pos_coeffs;  // S x p

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  bool reg = false;
  if (lmin <= 0.0 || lmax / lmin > kMaxCondition) {
    sigma.diagonal().array() += kRidge * sigma.trace();
    reg = true;
  }
  if (regularized) *regularized = reg;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  const Eigen::MatrixXd whitened = llt.matrixL().solve(dev.transpose());  // p x S
  return whitened.colwise().squaredNorm().transpose();
}

ScalingFactor ChanceSampler::scaling_factor(const Eigen::VectorXd& coeffs) const {
  ScalingFactor out;
  const Eigen::MatrixXd sigma = position_covariance(coeffs, basis_, spec_.position_dims);
  if (!(sigma.trace() > 0.0)) {
    out.degenerate = true;
    return out;
  }
  Eigen::VectorXd d2 = mahalanobis(coeffs, &out.regularized);
  const auto idx = static_cast<Eigen::Index>(std::ceil(spec_.probability * static_cast<double>(d2.size()))) - 1;
  std::nth_element(d2.data(), d2.data() + idx, d2.data() + d2.size());
  out.value = d2(idx);
  return out;
}

ScalingFactor scaling_factor(const Eigen::VectorXd& coeffs, const BasisSet& basis, const ChanceSpec& spec) {
  return ChanceSampler(basis, spec).scaling_factor(coeffs);
}

// ---------------------------------------------------------------------------
// lambda_max

LambdaMax lambda_max_with_grad(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0)
    throw std::invalid_argument("lambda_max_with_grad: need a square matrix");
  LambdaMax out;
  const Eigen::Index p = sigma.rows();
  if (p == 1) {
    out.value = sigma(0, 0);
    out.grad = Eigen::MatrixXd::Ones(1, 1);
    return out;
  }
  Eigen::VectorXd evals;
  Eigen::MatrixXd evecs;
  const Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
  if (p == 2) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig;
    eig.computeDirect(Eigen::Matrix2d(sym));
    evals = eig.eigenvalues();
    evecs = eig.eigenvectors();
  } else if (p == 3) {
    // the closed-form 3x3 path loses accuracy on nearly repeated eigenvalues
    const Eigen::Matrix3d sym3 = sym;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(sym3);
    evals = eig.eigenvalues();
    evecs = eig.eigenvectors();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    evals = eig.eigenvalues();
    evecs = eig.eigenvectors();
  }
  const double l1 = evals(p - 1);
  const double l2 = evals(p - 2);
  const Eigen::VectorXd v1 = evecs.col(p - 1);
  const Eigen::VectorXd v2 = evecs.col(p - 2);
  const double eps = kGapScale * std::abs(sigma.trace());
  const double gap = l1 - l2;
  if (gap >= eps && gap > 0.0) {
    out.value = l1;
    out.grad = v1 * v1.transpose();
    return out;
  }
  out.smoothed = true;
  const double root = std::sqrt(gap * gap + eps * eps);
  out.value = 0.5 * (l1 + l2) + 0.5 * root;
  const Eigen::MatrixXd p1 = v1 * v1.transpose();
  const Eigen::MatrixXd p2 = v2 * v2.transpose();
  out.grad = 0.5 * (p1 + p2);
  if (root > 0.0) out.grad += 0.5 * gap / root * (p1 - p2);
  return out;
}

// ---------------------------------------------------------------------------
// obstacle constraint

ConstraintEval obstacle_constraint(const Eigen::VectorXd& coeffs, const BasisSet& basis, const CircleObstacle& obs,
                                   double s, const std::vector<int>& dims) {
  if (s < 0.0) throw std::invalid_argument("obstacle_constraint: negative scaling factor");
  if (static_cast<std::size_t>(obs.center.size()) != dims.size())
    throw std::invalid_argument("obstacle_constraint: obstacle dimension does not match position dims");
  const int terms = basis.count();
  ConstraintEval out;
  out.grad = Eigen::VectorXd::Zero(coeffs.size());

  const Eigen::VectorXd diff = position_mean(coeffs, terms, dims) - obs.center;
  double inflation = 0.0;
  if (terms > 1 && s > 0.0) {
    const Eigen::MatrixXd sigma = position_covariance(coeffs, basis, dims);
    const LambdaMax lm = lambda_max_with_grad(sigma);
    out.smoothed = lm.smoothed;
    if (lm.value > 0.0) {
      inflation = std::sqrt(s * lm.value);
      // dG/dlambda, then dlambda/dx_aj = 2 gamma_j (M C)_{a j}
      const double dg_dl = (obs.radius + inflation) * s / inflation;
      const auto c = coefficients(coeffs, terms);
      Eigen::MatrixXd pos(terms, dims.size());
      for (std::size_t a = 0; a < dims.size(); ++a) pos.col(a) = c.col(dims[a]);
      const Eigen::MatrixXd mc = lm.grad * pos.transpose();  // p x terms
      for (std::size_t a = 0; a < dims.size(); ++a)
        for (int j = 1; j < terms; ++j)
          out.grad(dims[a] * terms + j) = dg_dl * 2.0 * basis.norms(j) * mc(a, j);
    }
  }
  const double r = obs.radius + inflation;
  out.value = r * r - diff.squaredNorm();
  for (std::size_t a = 0; a < dims.size(); ++a) out.grad(dims[a] * terms) = -2.0 * diff(a);
  return out;
}

// ---------------------------------------------------------------------------
// augmented Lagrangian

PenaltyValue al_penalty(double lambda, double mu, double g) {
  if (!(mu > 0.0)) throw std::invalid_argument("al_penalty: mu must be positive");
  if (lambda < 0.0) throw std::invalid_argument("al_penalty: lambda must be non-negative");
  PenaltyValue out;
  const double shifted = lambda + mu * g;
  if (shifted > 0.0) {
    out.value = (shifted * shifted - lambda * lambda) / (2.0 * mu);
    out.d1 = shifted;
    out.d2 = mu;
  } else {
    out.value = -lambda * lambda / (2.0 * mu);
  }
  return out;
}

ALState ALState::initial(int constraints, int horizon, double mu_init) {
  ALState st;
  st.lambdas = Eigen::MatrixXd::Zero(constraints, horizon);
  st.penalties = Eigen::MatrixXd::Constant(constraints, horizon, mu_init);
  st.last_violation = Eigen::VectorXd::Constant(constraints, std::numeric_limits<double>::infinity());
  return st;
}

ALState ALState::shifted() const {
  ALState st = *this;
  const auto h = horizon();
  if (h > 1) {
    st.lambdas.leftCols(h - 1) = lambdas.rightCols(h - 1);
    st.penalties.leftCols(h - 1) = penalties.rightCols(h - 1);
  }
  st.last_violation.setConstant(std::numeric_limits<double>::infinity());
  st.outer_iterations = 0;
  return st;
}

ALState al_update(const ALState& state, const Eigen::MatrixXd& g, const AlOptions& options) {
  if (g.rows() != state.lambdas.rows() || g.cols() != state.lambdas.cols())
    throw std::invalid_argument("al_update: constraint matrix shape mismatch");
  ALState next = state;
  next.lambdas = (state.lambdas.array() + state.penalties.array() * g.array()).max(0.0).matrix();
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const double violation = std::max(0.0, g.row(i).maxCoeff());
    if (violation > options.improvement_ratio * state.last_violation(i)) {
      for (Eigen::Index k = 0; k < g.cols(); ++k) {
        double mu = state.penalties(i, k) * options.mu_increase;
        if (mu > options.mu_max) {
          mu = options.mu_max;
          next.penalty_capped = true;
        }
        next.penalties(i, k) = mu;
      }
    }
    next.last_violation(i) = violation;
  }
  next.outer_iterations = state.outer_iterations + 1;
  return next;
}

AugmentedObjective::AugmentedObjective(const QuadraticCost& base, const BasisSet& basis,
                                       const std::vector<CircleObstacle>& obstacles, const std::vector<int>& dims,
                                       std::vector<double> scaling, const ALState& al)
    : base_(base), basis_(basis), obstacles_(obstacles), dims_(dims), scaling_(std::move(scaling)), al_(al) {
  if (al_.constraint_count() != static_cast<int>(obstacles_.size()))
    throw std::invalid_argument("AugmentedObjective: multiplier rows do not match obstacle count");
  if (static_cast<int>(scaling_.size()) != al_.horizon() + 1)
    throw std::invalid_argument("AugmentedObjective: scaling factors do not cover the horizon");
}

double AugmentedObjective::inflation(int state_index, const Eigen::VectorXd& x) const {
  const double s = scaling_[state_index];
  if (basis_.count() <= 1 || !(s > 0.0)) return 0.0;
  const double lmax = lambda_max_with_grad(position_covariance(x, basis_, dims_)).value;
  return lmax > 0.0 ? std::sqrt(s * lmax) : 0.0;
}

double AugmentedObjective::penalty(int state_index, const Eigen::VectorXd& x) const {
  const double infl = inflation(state_index, x);
  const Eigen::VectorXd mean = position_mean(x, basis_.count(), dims_);
  double p = 0.0;
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double r = obstacles_[i].radius + infl;
    const double g = r * r - (mean - obstacles_[i].center).squaredNorm();
    p += al_penalty(al_.lambdas(ii, state_index - 1), al_.penalties(ii, state_index - 1), g).value;
  }
  return p;
}

void AugmentedObjective::penalty_expansion(int state_index, const Eigen::VectorXd& x, Eigen::VectorXd& gx,
                                           Eigen::MatrixXd& gxx) const {
  const double infl = inflation(state_index, x);
  const Eigen::VectorXd mean = position_mean(x, basis_.count(), dims_);
  for (std::size_t i = 0; i < obstacles_.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double lambda = al_.lambdas(ii, state_index - 1), mu = al_.penalties(ii, state_index - 1);
    const double r = obstacles_[i].radius + infl;
    if (al_penalty(lambda, mu, r * r - (mean - obstacles_[i].center).squaredNorm()).d2 == 0.0) continue;
    const ConstraintEval ce = obstacle_constraint(x, basis_, obstacles_[i], scaling_[state_index], dims_);
    const PenaltyValue pv = al_penalty(lambda, mu, ce.value);
    gx.noalias() += pv.d1 * ce.grad;
    gxx.noalias() += pv.d2 * ce.grad * ce.grad.transpose();
  }
}

double AugmentedObjective::running(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  double j = base_.running(k, x, u);
  if (k >= 1) j += penalty(k, x);
  return j;
}

double AugmentedObjective::terminal(const Eigen::VectorXd& x) const {
  return base_.terminal(x) + (al_.horizon() > 0 ? penalty(al_.horizon(), x) : 0.0);
}

void AugmentedObjective::running_expansion(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                           StageExpansion& out) const {
  base_.running_expansion(k, x, u, out);
  if (k >= 1) penalty_expansion(k, x, out.lx, out.lxx);
}

void AugmentedObjective::terminal_expansion(const Eigen::VectorXd& x, Eigen::VectorXd& vx,
                                            Eigen::MatrixXd& vxx) const {
  base_.terminal_expansion(x, vx, vxx);
  if (al_.horizon() > 0) penalty_expansion(al_.horizon(), x, vx, vxx);
}

Eigen::MatrixXd evaluate_constraints(const std::vector<Eigen::VectorXd>& states, const BasisSet& basis,
                                     const std::vector<CircleObstacle>& obstacles, const std::vector<double>& scaling,
                                     const std::vector<int>& dims) {
  const int horizon = static_cast<int>(states.size()) - 1;
  Eigen::MatrixXd g(obstacles.size(), std::max(horizon, 0));
  for (int k = 1; k <= horizon; ++k)
    for (std::size_t i = 0; i < obstacles.size(); ++i)
      g(static_cast<Eigen::Index>(i), k - 1) = obstacle_constraint(states[k], basis, obstacles[i], scaling[k], dims).value;
  return g;
}

// ---------------------------------------------------------------------------

namespace {
std::vector<double> scaling_along(const ChanceSampler* sampler, const std::vector<Eigen::VectorXd>& states) {
  std::vector<double> s(states.size(), 0.0);
  if (!sampler) return s;
  for (std::size_t k = 0; k < states.size(); ++k) s[k] = sampler->scaling_factor(states[k]).value;
  return s;
}
}  // namespace

ConstrainedResult solve_constrained(const ConstrainedProblem& problem, std::vector<Eigen::VectorXd> initial_controls,
                                    const AlOptions& al_options, const DdpOptions& ddp_options, const ALState* warm) {
  if (!problem.dynamics || !problem.cost) throw std::invalid_argument("solve_constrained: incomplete problem");
  const GpcModel& gm = problem.dynamics->model();
  const int horizon = static_cast<int>(initial_controls.size());
  const int w = static_cast<int>(problem.obstacles.size());
  const std::vector<int> dims = problem.sampler ? problem.sampler->spec().position_dims : std::vector<int>{0, 1};

  ConstrainedResult res;
  if (w == 0) {
    DdpResult inner = solve(*problem.dynamics, *problem.cost, problem.x0, std::move(initial_controls),
                            problem.limits, ddp_options);
    res.trajectory = std::move(inner.trajectory);
    res.al = ALState::initial(0, horizon, al_options.mu_init);
    res.scaling = scaling_along(problem.sampler, res.trajectory.states);
    res.constraint_values = Eigen::MatrixXd::Zero(0, horizon);
    res.outer_iterations = 1;
    res.inner_iterations = inner.iterations;
    res.cost = inner.cost;
    res.inner_converged = inner.converged;
    res.converged = inner.converged;
    res.failed = inner.failed;
    res.message = inner.message;
    return res;
  }

  ALState al = warm && warm->constraint_count() == w && warm->horizon() == horizon
                   ? *warm
                   : ALState::initial(w, horizon, al_options.mu_init);
  al.last_violation.setConstant(std::numeric_limits<double>::infinity());

  std::vector<Eigen::VectorXd> controls = std::move(initial_controls);
  if (problem.limits)
    for (auto& u : controls) u = problem.limits->clamp(u);
  Trajectory traj;
  traj.controls = controls;
  if (!rollout(*problem.dynamics, problem.x0, traj.controls, traj.states)) {
    res.failed = true;
    res.message = "initial rollout is not finite";
    res.trajectory = std::move(traj);
    res.al = std::move(al);
    return res;
  }
  std::vector<double> scaling = scaling_along(problem.sampler, traj.states);

  for (int outer = 0; outer < al_options.max_outer_iterations; ++outer) {
    const AugmentedObjective objective(*problem.cost, gm.basis(), problem.obstacles, dims, scaling, al);
    DdpResult inner = solve(*problem.dynamics, objective, problem.x0, traj.controls, problem.limits, ddp_options);
    res.inner_iterations += inner.iterations;
    res.inner_converged = inner.converged;
    if (inner.failed && inner.accepted_costs.size() <= 1) res.message = inner.message;
    traj = std::move(inner.trajectory);

    scaling = scaling_along(problem.sampler, traj.states);
    const Eigen::MatrixXd g = evaluate_constraints(traj.states, gm.basis(), problem.obstacles, scaling, dims);
    const double violation = std::max(0.0, g.size() ? g.maxCoeff() : 0.0);
    res.violation_history.push_back(violation);
    res.constraint_values = g;
    res.max_violation = violation;
    res.outer_iterations = outer + 1;
    al = al_update(al, g, al_options);
    if (violation < al_options.tolerance && inner.converged) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) {
    res.failed = true;
    if (res.message.empty())
      res.message = "outer iteration limit reached with violation " + std::to_string(res.max_violation);
  } else {
    res.message = "converged";
  }
  res.cost = total_cost(*problem.cost, traj);
  res.trajectory = std::move(traj);
  res.scaling = std::move(scaling);
  res.al = std::move(al);
  return res;
}

}  // namespace gpcddp
