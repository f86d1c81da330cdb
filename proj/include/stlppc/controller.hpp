#pragma once

#include <Eigen/Dense>

#include "stlppc/dynamics.hpp"
#include "stlppc/funnel.hpp"
#include "stlppc/robustness.hpp"
#include "stlppc/stl_ast.hpp"

namespace stlppc {

struct ControlInput {
  Eigen::VectorXd u;
  double rho = 0.0;   // smooth robustness of the body at x
  ErrorTriple error;  // at (x, t_local)
};

/// u = -eps(x, t) g(x)^T grad rho(x). Propagates FunnelViolation; throws
/// SingularInput when u is not finite.
ControlInput control_input(const SystemModel& sys, const FormulaNode& body,
                           const FunnelParams& params, const Eigen::VectorXd& x, double t_local,
                           const SmoothConfig& cfg);

}  // namespace stlppc
