#include "gpcddp/ddp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gpcddp {

// ---------------------------------------------------------------------------
// Cost

const Eigen::VectorXd& QuadraticCost::target(int k) const {
  if (targets.empty()) throw std::logic_error("QuadraticCost: no target");
  if (targets.size() == 1) return targets.front();
  return targets.at(static_cast<std::size_t>(k));
}

double QuadraticCost::running(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  const Eigen::VectorXd dx = x - target(k);
  return 0.5 * dx.dot(state_weight * dx) + 0.5 * u.dot(control_weight * u);
}

double QuadraticCost::terminal(const Eigen::VectorXd& x) const {
  const int last = targets.size() == 1 ? 0 : static_cast<int>(targets.size()) - 1;
  const Eigen::VectorXd dx = x - target(last);
  return 0.5 * dx.dot(terminal_weight * dx);
}

void QuadraticCost::running_expansion(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                      StageExpansion& out) const {
  out.lx.noalias() += state_weight * (x - target(k));
  out.lu.noalias() += control_weight * u;
  out.lxx += state_weight;
  out.luu += control_weight;
}

void QuadraticCost::terminal_expansion(const Eigen::VectorXd& x, Eigen::VectorXd& vx, Eigen::MatrixXd& vxx) const {
  const int last = targets.size() == 1 ? 0 : static_cast<int>(targets.size()) - 1;
  vx.noalias() += terminal_weight * (x - target(last));
  vxx += terminal_weight;
}

Eigen::MatrixXd expected_state_weight(const Eigen::VectorXd& mean_weights, const Eigen::VectorXd& moment_weights,
                                      const Eigen::VectorXd& norms) {
  const auto n = mean_weights.size();
  const auto terms = norms.size();
  if (moment_weights.size() != n) throw std::invalid_argument("expected_state_weight: weight size mismatch");
  Eigen::VectorXd diag(n * terms);
  for (Eigen::Index i = 0; i < n; ++i) {
    diag(i * terms) = mean_weights(i) * norms(0);
    for (Eigen::Index j = 1; j < terms; ++j) diag(i * terms + j) = moment_weights(i) * norms(j);
  }
  return diag.asDiagonal();
}

BoxLimits::BoxLimits(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) throw std::invalid_argument("BoxLimits: size mismatch");
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("BoxLimits: lower > upper");
}

// ---------------------------------------------------------------------------
// Passes

bool rollout(const DiscreteDynamics& dynamics, const Eigen::VectorXd& x0, const std::vector<Eigen::VectorXd>& controls,
             std::vector<Eigen::VectorXd>& states) {
  states.resize(controls.size() + 1);
  states[0] = x0;
  try {
    for (std::size_t k = 0; k < controls.size(); ++k) {
      states[k + 1] = dynamics.step(states[k], controls[k]);
      if (!states[k + 1].allFinite()) return false;
    }
  } catch (const std::domain_error&) {
    return false;
  }
  return true;
}

double total_cost(const Objective& cost, const Trajectory& traj) {
  double j = 0.0;
  for (int k = 0; k < traj.horizon(); ++k) j += cost.running(k, traj.states[k], traj.controls[k]);
  return j + cost.terminal(traj.states.back());
}

Linearization linearize(const DiscreteDynamics& dynamics, const Trajectory& nominal) {
  const int n = dynamics.state_dim(), m = dynamics.control_dim();
  Linearization lin;
  lin.fx.resize(nominal.horizon());
  lin.fu.resize(nominal.horizon());
  for (int k = 0; k < nominal.horizon(); ++k) {
    lin.fx[k].resize(n, n);
    lin.fu[k].resize(n, m);
    dynamics.linearize(nominal.states[k], nominal.controls[k], lin.fx[k], lin.fu[k]);
  }
  return lin;
}

BackwardPassResult backward_pass(const Trajectory& nominal, const Linearization& lin, const Objective& cost,
                                 const std::optional<BoxLimits>& limits, double reg, const Policy* warm) {
  const int horizon = nominal.horizon();
  const int n = static_cast<int>(nominal.states.front().size());
  BackwardPassResult out;
  out.policy.feedforward.resize(horizon);
  out.policy.feedback.resize(horizon);

  Eigen::VectorXd vx = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd vxx = Eigen::MatrixXd::Zero(n, n);
  cost.terminal_expansion(nominal.states.back(), vx, vxx);

  StageExpansion e;
  Eigen::MatrixXd fxt_vxx, qxx, quu, qux;
  Eigen::VectorXd qx, qu;
  for (int k = horizon - 1; k >= 0; --k) {
    const Eigen::MatrixXd& fx = lin.fx[k];
    const Eigen::MatrixXd& fu = lin.fu[k];
    const Eigen::VectorXd& ubar = nominal.controls[k];
    const int m = static_cast<int>(ubar.size());
    e.resize(n, m);
    cost.running_expansion(k, nominal.states[k], ubar, e);

    qx = e.lx;
    qx.noalias() += fx.transpose() * vx;
    qu = e.lu;
    qu.noalias() += fu.transpose() * vx;
    fxt_vxx.noalias() = fx.transpose() * vxx;
    const Eigen::MatrixXd vxx_fu = vxx * fu;
    qxx = e.lxx;
    qxx.noalias() += fxt_vxx * fx;
    quu = e.luu;
    quu.noalias() += fu.transpose() * vxx_fu;
    qux = e.lux;
    qux.noalias() += vxx_fu.transpose() * fx;

    Eigen::MatrixXd quu_reg = quu;
    quu_reg.diagonal().array() += reg;

    Eigen::VectorXd kff(m);
    Eigen::MatrixXd kfb = Eigen::MatrixXd::Zero(m, n);
    if (limits) {
      const Eigen::VectorXd lo = limits->lower - ubar;
      const Eigen::VectorXd hi = limits->upper - ubar;
      const Eigen::VectorXd init = warm && static_cast<int>(warm->feedforward.size()) == horizon
                                       ? warm->feedforward[k]
                                       : Eigen::VectorXd::Zero(m);
      const BoxQpResult qp = boxqp(quu_reg, qu, lo, hi, init);
      if (qp.status == BoxQpStatus::HessianNotPositiveDefinite) {
        out.ok = false;
        out.failed_step = k;
        return out;
      }
      kff = qp.x;
      std::vector<int> free_idx;
      for (int i = 0; i < m; ++i)
        if (qp.free(i)) free_idx.push_back(i);
      if (!free_idx.empty()) {
        const int nf = static_cast<int>(free_idx.size());
        Eigen::MatrixXd hff(nf, nf), quxf(nf, n);
        for (int a = 0; a < nf; ++a) {
          for (int b = 0; b < nf; ++b) hff(a, b) = quu_reg(free_idx[a], free_idx[b]);
          quxf.row(a) = qux.row(free_idx[a]);
        }
        Eigen::LLT<Eigen::MatrixXd> llt(hff);
        if (llt.info() != Eigen::Success) {
          out.ok = false;
          out.failed_step = k;
          return out;
        }
        const Eigen::MatrixXd kf = -llt.solve(quxf);
        for (int a = 0; a < nf; ++a) kfb.row(free_idx[a]) = kf.row(a);
      }
    } else {
      Eigen::LLT<Eigen::MatrixXd> llt(quu_reg);
      if (llt.info() != Eigen::Success) {
        out.ok = false;
        out.failed_step = k;
        return out;
      }
      kff = -llt.solve(qu);
      kfb = -llt.solve(qux);
    }

    out.policy.d1 += kff.dot(qu);
    out.policy.d2 += 0.5 * kff.dot(quu * kff);

    // value update in the form that stays valid when rows of K are zeroed
    const Eigen::MatrixXd quu_k = quu * kfb;  // m x n
    vx = qx;
    vx.noalias() += kfb.transpose() * (quu * kff + qu);
    vx.noalias() += qux.transpose() * kff;
    vxx = qxx;
    vxx.noalias() += kfb.transpose() * quu_k;
    vxx.noalias() += kfb.transpose() * qux;
    vxx.noalias() += qux.transpose() * kfb;
    vxx = 0.5 * (vxx + vxx.transpose()).eval();

    out.policy.feedforward[k] = std::move(kff);
    out.policy.feedback[k] = std::move(kfb);
  }
  return out;
}

ForwardPassResult forward_pass(const Policy& policy, const Eigen::VectorXd& x0, const DiscreteDynamics& dynamics,
                               const Objective& cost, double alpha, const Trajectory& nominal,
                               const std::optional<BoxLimits>& limits) {
  ForwardPassResult out;
  const int horizon = nominal.horizon();
  out.trajectory.states.resize(horizon + 1);
  out.trajectory.controls.resize(horizon);
  out.trajectory.states[0] = x0;
  double j = 0.0;
  try {
    for (int k = 0; k < horizon; ++k) {
      const Eigen::VectorXd& x = out.trajectory.states[k];
      Eigen::VectorXd u = nominal.controls[k] + alpha * policy.feedforward[k];
      u.noalias() += policy.feedback[k] * (x - nominal.states[k]);
      if (limits) u = limits->clamp(u);
      j += cost.running(k, x, u);
      out.trajectory.states[k + 1] = dynamics.step(x, u);
      out.trajectory.controls[k] = std::move(u);
      if (!out.trajectory.states[k + 1].allFinite()) return out;
    }
  } catch (const std::domain_error&) {
    return out;
  }
  j += cost.terminal(out.trajectory.states.back());
  out.cost = j;
  out.ok = std::isfinite(j);
  return out;
}

// ---------------------------------------------------------------------------
// Solver

DdpResult solve(const DiscreteDynamics& dynamics, const Objective& cost, const Eigen::VectorXd& x0,
                std::vector<Eigen::VectorXd> initial_controls, const std::optional<BoxLimits>& limits,
                const DdpOptions& options) {
  DdpResult res;
  if (x0.size() != dynamics.state_dim()) throw std::invalid_argument("ddp::solve: initial state dimension mismatch");
  for (auto& u : initial_controls) {
    if (u.size() != dynamics.control_dim()) throw std::invalid_argument("ddp::solve: control dimension mismatch");
    if (limits) u = limits->clamp(u);
  }

  Trajectory nominal;
  nominal.controls = std::move(initial_controls);
  if (!rollout(dynamics, x0, nominal.controls, nominal.states)) {
    res.failed = true;
    res.message = "initial rollout is not finite";
    res.trajectory = std::move(nominal);
    res.cost = std::numeric_limits<double>::infinity();
    return res;
  }
  double j = total_cost(cost, nominal);
  res.accepted_costs.push_back(j);

  const int horizon = nominal.horizon();
  if (horizon == 0) {
    res.trajectory = std::move(nominal);
    res.cost = j;
    res.converged = true;
    res.message = "empty horizon";
    return res;
  }

  double reg = options.reg_init;
  Linearization lin;
  bool relinearize = true;
  Policy policy;
  bool have_policy = false;

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (relinearize) {
      lin = linearize(dynamics, nominal);
      relinearize = false;
    }

    BackwardPassResult bp;
    while (true) {
      bp = backward_pass(nominal, lin, cost, limits, reg, have_policy ? &policy : nullptr);
      if (bp.ok) break;
      reg = std::max(reg * options.reg_increase, options.reg_min);
      if (reg > options.reg_max) break;
    }
    if (!bp.ok) {
      res.failed = true;
      res.failed_step = bp.failed_step;
      res.message = "Quu not positive definite at step " + std::to_string(bp.failed_step) +
                    " after maximum regularization";
      break;
    }
    policy = std::move(bp.policy);
    have_policy = true;

    // relative feedforward magnitude
    double gnorm = 0.0;
    for (int k = 0; k < horizon; ++k)
      gnorm += (policy.feedforward[k].array().abs() / (nominal.controls[k].array().abs() + 1.0)).maxCoeff();
    gnorm /= horizon;
    if (gnorm < options.gradient_tolerance && reg < 1e-5) {
      res.converged = true;
      res.message = "feedforward norm below tolerance";
      break;
    }

    bool accepted = false;
    double alpha = 1.0;
    ForwardPassResult fp;
    for (int ls = 0; ls < options.line_search_steps; ++ls, alpha *= 0.5) {
      fp = forward_pass(policy, x0, dynamics, cost, alpha, nominal, limits);
      if (!fp.ok) continue;
      const double actual = j - fp.cost;
      const double expected = policy.expected_improvement(alpha);
      if (actual < 0.0) continue;
      if (expected > 0.0 ? actual / expected >= options.armijo : actual > 0.0) {
        accepted = true;
        break;
      }
    }

    if (accepted) {
      const double dj = j - fp.cost;
      nominal = std::move(fp.trajectory);
      j = fp.cost;
      res.accepted_costs.push_back(j);
      relinearize = true;
      reg /= options.reg_decrease;
      if (reg < options.reg_min) reg = 0.0;
      if (dj < options.cost_tolerance) {
        ++iter;
        res.converged = true;
        res.message = "cost change below tolerance";
        break;
      }
    } else {
      reg = std::max(reg * options.reg_increase, options.reg_min);
      if (reg > options.reg_max) {
        res.failed = true;
        res.message = "no acceptable step at maximum regularization";
        break;
      }
    }
  }
  res.iterations = iter;
  if (!res.converged && !res.failed) res.message = "iteration limit reached";
  res.trajectory = std::move(nominal);
  res.policy = std::move(policy);
  res.cost = j;
  return res;
}

}  // namespace gpcddp
