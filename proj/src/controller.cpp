#include "stlppc/controller.hpp"

#include "stlppc/errors.hpp"

namespace stlppc {

ControlInput control_input(const SystemModel& sys, const FormulaNode& body,
                           const FunnelParams& params, const Eigen::VectorXd& x, double t_local,
                           const SmoothConfig& cfg) {
  const RobustnessResult rob = smooth_robustness(body, x, cfg);
  ControlInput out;
  out.rho = rob.value;
  out.error = transform_error(rob.value, params, t_local);
  out.u = -out.error.eps * (sys.g(x).transpose() * rob.gradient);
  if (!out.u.allFinite()) throw SingularInput("control input is not finite");
  return out;
}

}  // namespace stlppc
