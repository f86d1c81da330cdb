#include "stlppc/funnel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "stlppc/errors.hpp"

namespace stlppc {

double PerformanceFunction::value(double t) const {
  return (gamma0 - gamma_inf) * std::exp(-l * t) + gamma_inf;
}

double PerformanceFunction::derivative(double t) const {
  return -l * (gamma0 - gamma_inf) * std::exp(-l * t);
}

PerformanceSample performance_value(const PerformanceFunction& perf, double t) {
  return {perf.value(t), perf.derivative(t)};
}

double transform_xi(double xi) { return std::log(-(xi + 1.0) / xi); }

FunnelMargins funnel_margins(double rho, const FunnelParams& params, double t) {
  return {rho - params.lower(t), params.rho_max - rho};
}

ErrorTriple transform_error(double rho, const FunnelParams& params, double t) {
  const FunnelMargins m = funnel_margins(rho, params, t);
  if (!(m.upper > kFunnelGuard)) throw FunnelViolation(FunnelSide::upper, m.upper);
  if (!(m.lower > kFunnelGuard)) throw FunnelViolation(FunnelSide::lower, m.lower);
  ErrorTriple out;
  out.e = rho - params.rho_max;
  out.xi = out.e / params.perf.value(t);
  out.eps = transform_xi(out.xi);
  return out;
}

void SelectionPolicy::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("eta", "must lie in (0, 1)");
  if (!(gamma0_margin > 0.0 && std::isfinite(gamma0_margin)))
    throw ValidationError("gamma0_margin", "must be positive");
  if (!(gamma_inf_fraction > 0.0 && gamma_inf_fraction < 1.0))
    throw ValidationError("gamma_inf_fraction", "must lie in (0, 1)");
  if (!(l_free >= 0.0 && std::isfinite(l_free)))
    throw ValidationError("l_free", "must be nonnegative");
  if (!(unbounded_horizon > 0.0 && std::isfinite(unbounded_horizon)))
    throw ValidationError("unbounded_horizon", "must be positive");
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

FunnelParams design_funnel(std::size_t task, double rho, double tau, double t_star, double r,
                           std::optional<double> rho_max_request, double rho_opt,
                           const SelectionPolicy& policy) {
  if (!std::isfinite(rho)) throw InfeasibleTask(task, "robustness at the switch is not finite");
  if (!(r >= 0.0)) throw InfeasibleTask(task, "r must be nonnegative");
  if (tau < 0.0) throw DeadlinePassed(task, tau);
  if (tau == 0.0 && !(rho > r))
    throw InfeasibleTask(task, "deadline is now and rho=" + num(rho) + " <= r=" + num(r));
  if (!(rho_opt > r))
    throw InfeasibleTask(task, "rho_opt=" + num(rho_opt) + " does not exceed r=" + num(r));

  const double base = std::max(0.0, rho);
  if (!(base < rho_opt))
    throw InfeasibleTask(task, "robustness " + num(rho) + " already at the optimum " + num(rho_opt));

  FunnelParams out;
  out.t_star = t_star;
  out.deadline = tau;
  out.r = r;

  if (rho_max_request) {
    const double req = *rho_max_request;
    if (!(req > 0.0 && req < rho_opt))
      throw InvalidRhoMax(task, "requested rho_max=" + num(req) + " outside (0, rho_opt=" +
                                    num(rho_opt) + ")");
  }
  if (rho_max_request && *rho_max_request > base && *rho_max_request > r) {
    out.rho_max = *rho_max_request;
  } else {
    out.rho_max = base + policy.eta * (rho_opt - base);
    if (!(out.rho_max > r)) out.rho_max = r + policy.eta * (rho_opt - r);
  }

  const double span = out.rho_max - rho;
  double gamma0 = span * (1.0 + policy.gamma0_margin);
  if (tau == 0.0) gamma0 = std::min(gamma0, out.rho_max - r);
  const double gamma_inf = std::min(policy.gamma_inf_fraction * (out.rho_max - r), gamma0);
  double l = policy.l_free;
  // With tau = 0 the cap above already gives -gamma0 + rho_max >= r; rounding
  // must not route it into the closed form, which divides by tau.
  if (tau > 0.0 && -gamma0 + out.rho_max < r)
    l = -std::log((r + gamma_inf - out.rho_max) / (-(gamma0 - gamma_inf))) / tau;
  out.perf = {gamma0, gamma_inf, l};

  const double xi0 = (rho - out.rho_max) / out.perf.value(0.0);
  if (!(xi0 > -1.0 && xi0 < 0.0))
    throw InfeasibleTask(task, "initial normalized error " + num(xi0) + " outside (-1, 0)");
  if (!(std::isfinite(l) && l >= 0.0))
    throw InfeasibleTask(task, "decay rate l=" + num(l) + " is not admissible");
  if (std::isfinite(tau) && -out.perf.value(tau) + out.rho_max < r - 1e-9)
    throw InfeasibleTask(task, "funnel does not reach r by the deadline");
  return out;
}

double choose_t_star(const AtomicTask& task, const TaskSettings& settings,
                     const SelectionPolicy& policy) {
  const Window& w = task.window;
  if (task.kind == TaskKind::always) return w.lo;
  if (settings.t_star) {
    const double ts = *settings.t_star;
    if (!(ts >= w.lo && ts <= w.hi))
      throw InfeasibleTask(task.index, "t_star=" + num(ts) + " outside [" + num(w.lo) + ", " +
                                           num(w.hi) + "]");
    return ts;
  }
  return w.bounded() ? w.hi : w.lo + policy.unbounded_horizon;
}

FunnelParams select_funnel_parameters(const AtomicTask& task, const Eigen::VectorXd& x_switch,
                                      const TaskSettings& settings, double delta, int p,
                                      double rho_opt, const SmoothConfig& cfg,
                                      const SelectionPolicy& policy) {
  const double rho = smooth_robustness(task.body, x_switch, cfg).value;
  const double t_star = choose_t_star(task, settings, policy);
  double tau = t_star - p * delta;
  // delta is accumulated from the step grid; snap rounding noise to the deadline.
  if (std::abs(tau) <= 1e-9 * std::max(1.0, std::abs(t_star))) tau = 0.0;
  return design_funnel(task.index, rho, tau, t_star, settings.r, settings.rho_max, rho_opt, policy);
}

}  // namespace stlppc
