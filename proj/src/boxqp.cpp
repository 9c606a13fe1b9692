#include "gpcddp/ddp.hpp"

#include <cmath>
#include <stdexcept>

namespace gpcddp {

std::string to_string(BoxQpStatus s) {
  switch (s) {
    case BoxQpStatus::HessianNotPositiveDefinite: return "hessian not positive definite";
    case BoxQpStatus::NoDescentDirection: return "no descent direction";
    case BoxQpStatus::MaxIterations: return "maximum iterations exceeded";
    case BoxQpStatus::LineSearchFailed: return "line search failed";
    case BoxQpStatus::SmallImprovement: return "improvement below tolerance";
    case BoxQpStatus::SmallGradient: return "gradient below tolerance";
    case BoxQpStatus::AllClamped: return "all dimensions clamped";
  }
  return "unknown";
}

namespace {

constexpr double kMinGradient = 1e-8;
constexpr double kMinRelativeImprovement = 1e-8;
constexpr double kStepDecrease = 0.6;
constexpr double kMinStep = 1e-22;
constexpr double kArmijo = 0.1;

Eigen::MatrixXd select(const Eigen::MatrixXd& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Eigen::MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

}  // namespace

BoxQpResult boxqp(const Eigen::MatrixXd& h, const Eigen::VectorXd& q, const Eigen::VectorXd& lower,
                  const Eigen::VectorXd& upper, const Eigen::VectorXd& init, int max_iterations) {
  const int n = static_cast<int>(q.size());
  if (h.rows() != n || h.cols() != n || lower.size() != n || upper.size() != n || init.size() != n)
    throw std::invalid_argument("boxqp: dimension mismatch");
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("boxqp: lower > upper");

  auto value_of = [&](const Eigen::VectorXd& x) { return x.dot(q) + 0.5 * x.dot(h * x); };

  BoxQpResult res;
  res.x = init.cwiseMax(lower).cwiseMin(upper);
  res.free = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, true);
  Eigen::Array<bool, Eigen::Dynamic, 1> clamped = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false);

  double value = value_of(res.x);
  double old_value = 0.0;
  Eigen::LLT<Eigen::MatrixXd> factor;
  std::vector<int> free_idx;
  bool done = false;

  int iter = 0;
  for (; iter < max_iterations && !done; ++iter) {
    if (iter > 0 && (old_value - value) < kMinRelativeImprovement * std::abs(old_value)) {
      res.status = BoxQpStatus::SmallImprovement;
      done = true;
      break;
    }
    old_value = value;

    const Eigen::VectorXd grad = q + h * res.x;
    const Eigen::Array<bool, Eigen::Dynamic, 1> old_clamped = clamped;
    for (int i = 0; i < n; ++i)
      clamped(i) = (res.x(i) == lower(i) && grad(i) > 0.0) || (res.x(i) == upper(i) && grad(i) < 0.0);
    res.free = !clamped;

    if (clamped.all()) {
      res.status = BoxQpStatus::AllClamped;
      res.gradient_norm = 0.0;
      done = true;
      break;
    }

    if (iter == 0 || (old_clamped != clamped).any()) {
      free_idx.clear();
      for (int i = 0; i < n; ++i)
        if (res.free(i)) free_idx.push_back(i);
      factor.compute(select(h, free_idx, free_idx));
      if (factor.info() != Eigen::Success) {
        res.status = BoxQpStatus::HessianNotPositiveDefinite;
        done = true;
        break;
      }
    }

    double gnorm2 = 0.0;
    for (int i : free_idx) gnorm2 += grad(i) * grad(i);
    res.gradient_norm = std::sqrt(gnorm2);
    if (res.gradient_norm < kMinGradient) {
      res.status = BoxQpStatus::SmallGradient;
      done = true;
      break;
    }

    // Newton step on the free set with clamped dims held fixed
    const Eigen::VectorXd x_clamped = (clamped).select(res.x, Eigen::VectorXd::Zero(n));
    const Eigen::VectorXd grad_clamped = q + h * x_clamped;
    Eigen::VectorXd rhs(free_idx.size());
    for (std::size_t i = 0; i < free_idx.size(); ++i) rhs(i) = grad_clamped(free_idx[i]);
    const Eigen::VectorXd newton = factor.solve(rhs);
    Eigen::VectorXd search = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < free_idx.size(); ++i) search(free_idx[i]) = -newton(i) - res.x(free_idx[i]);

    const double sdotg = search.dot(grad);
    if (sdotg >= 0.0) {
      res.status = BoxQpStatus::NoDescentDirection;
      done = true;
      break;
    }

    double step = 1.0;
    Eigen::VectorXd xc = (res.x + step * search).cwiseMax(lower).cwiseMin(upper);
    double vc = value_of(xc);
    bool step_ok = true;
    while ((vc - value) / (step * sdotg) < kArmijo) {
      step *= kStepDecrease;
      xc = (res.x + step * search).cwiseMax(lower).cwiseMin(upper);
      vc = value_of(xc);
      if (step < kMinStep) {
        step_ok = false;
        break;
      }
    }
    if (!step_ok) {
      res.status = BoxQpStatus::LineSearchFailed;
      done = true;
      break;
    }
    res.x = xc;
    value = vc;
  }
  res.iterations = iter;
  if (!done) res.status = BoxQpStatus::MaxIterations;
  return res;
}

}  // namespace gpcddp
