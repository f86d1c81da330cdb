#pragma once

#include <cstddef>
#include <optional>

#include <Eigen/Dense>

#include "stlppc/robustness.hpp"
#include "stlppc/stl_ast.hpp"

namespace stlppc {

/// gamma(t) = (gamma0 - gamma_inf) exp(-l t) + gamma_inf
struct PerformanceFunction {
  double gamma0 = 1.0;
  double gamma_inf = 0.1;
  double l = 0.0;

  double value(double t) const;
  double derivative(double t) const;
};

struct PerformanceSample {
  double gamma = 0.0;
  double gamma_dot = 0.0;
};

PerformanceSample performance_value(const PerformanceFunction& perf, double t);

/// Parameters of one funnel episode. `t_star` is expressed in the task's own
/// window frame (global time for p = 1, step-relative for p = 0); `deadline`
/// is the episode-local tau = t_star - p * Delta at which rho > r is enforced.
struct FunnelParams {
  double t_star = 0.0;
  double deadline = 0.0;
  double r = 0.0;
  double rho_max = 1.0;
  PerformanceFunction perf;

  double lower(double t) const { return rho_max - perf.value(t); }
  double upper() const { return rho_max; }
};

struct ErrorTriple {
  double e = 0.0;
  double xi = -0.5;
  double eps = 0.0;
};

/// Guard band applied to both funnel boundaries.
inline constexpr double kFunnelGuard = 1e-12;

/// S(xi) = ln(-(xi + 1) / xi), the transformation with M = 0.
double transform_xi(double xi);

/// e = rho - rho_max, xi = e / gamma(t), eps = S(xi). Throws FunnelViolation
/// when rho is not strictly inside (rho_max - gamma(t), rho_max).
ErrorTriple transform_error(double rho, const FunnelParams& params, double t);

struct FunnelMargins {
  double lower = 0.0;  // rho - (rho_max - gamma(t))
  double upper = 0.0;  // rho_max - rho
};

FunnelMargins funnel_margins(double rho, const FunnelParams& params, double t);

/// Free constants of the parameter selection. All lie inside the admissible
/// intervals for any feasible input.
struct SelectionPolicy {
  double eta = 0.9;                  // rho_max = base + eta (rho_opt - base)
  double gamma0_margin = 0.1;        // gamma0 = (rho_max - rho)(1 + margin)
  double gamma_inf_fraction = 0.1;   // gamma_inf = fraction (rho_max - r), in (0, 1)
  double l_free = 0.1;               // decay rate when the deadline does not bind
  double unbounded_horizon = 10.0;   // t_star - lo for eventually-tasks with hi = inf

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

/// Per-task settings from the scenario.
struct TaskSettings {
  double r = 0.0;
  std::optional<double> rho_max;
  std::optional<double> t_star;
};

/// Parameter design from scalars: rho at the switch, local deadline tau,
/// r, optional rho_max request, and rho_opt of the body. `task` only labels
/// diagnostics.
FunnelParams design_funnel(std::size_t task, double rho, double tau, double t_star, double r,
                           std::optional<double> rho_max_request, double rho_opt,
                           const SelectionPolicy& policy);

/// t_star for `task` given the settings and policy.
double choose_t_star(const AtomicTask& task, const TaskSettings& settings,
                     const SelectionPolicy& policy);

/// Full runtime selection at a switch: evaluates rho at x_switch, picks
/// t_star, checks feasibility against tau = t_star - p * delta, and designs
/// the funnel.
FunnelParams select_funnel_parameters(const AtomicTask& task, const Eigen::VectorXd& x_switch,
                                      const TaskSettings& settings, double delta, int p,
                                      double rho_opt, const SmoothConfig& cfg,
                                      const SelectionPolicy& policy);

}  // namespace stlppc
