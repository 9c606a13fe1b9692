#pragma once

// Self-checks behind the `validate` subcommand.

#include <cstdint>
#include <string>
#include <vector>

namespace gpcddp {

struct CheckResult {
  std::string name;
  bool passed = false;
  double error = 0.0;
  double tolerance = 0.0;
};

CheckResult check_quadrature_exactness();
CheckResult check_orthogonality();
CheckResult check_moments(std::uint64_t seed);
CheckResult check_riccati(std::uint64_t seed);
CheckResult check_jacobians(std::uint64_t seed);
CheckResult check_constraint_gradients(std::uint64_t seed);

std::vector<CheckResult> run_validation(std::uint64_t seed);

}  // namespace gpcddp
