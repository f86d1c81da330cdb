#include "stlppc/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stlppc/errors.hpp"

namespace stlppc {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const AtomicTask& task_at(const TaskPlan& plan, std::size_t q) { return plan.tasks.at(q - 1); }

bool on_grid(double v, double h) {
  if (!std::isfinite(v)) return true;
  const double n = v / h;
  return std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, std::abs(n));
}

}  // namespace

TaskPlan make_plan(const FlattenResult& flat, std::vector<TaskSettings> settings,
                   const SmoothConfig& smooth, const SelectionPolicy& policy,
                   const Eigen::VectorXd& x_hint, const OptimumOptions& options) {
  if (flat.tasks.empty()) throw FragmentViolation("formula yields no tasks");
  if (settings.size() > flat.tasks.size())
    throw ValidationError("task " + std::to_string(settings.size()),
                          "index beyond the " + std::to_string(flat.tasks.size()) + " tasks");
  policy.validate();
  TaskPlan plan;
  plan.kind = flat.kind;
  plan.tasks = flat.tasks;
  plan.smooth = smooth;
  plan.policy = policy;
  settings.resize(flat.tasks.size());
  plan.settings = std::move(settings);
  for (const auto& task : plan.tasks) {
    try {
      plan.rho_opt.push_back(estimate_optimum(task.body, x_hint, smooth, options).rho_opt);
    } catch (const InfeasibleFormula& e) {
      throw InfeasibleTask(task.index, "smooth optimum of the body is " + num(e.rho_opt()) +
                                           " <= 0 at k=" + num(smooth.k));
    }
  }
  return plan;
}

void validate_step(const TaskPlan& plan, double h) {
  if (!(h > 0.0 && std::isfinite(h))) throw ValidationError("step", "must be positive");
  auto need = [&](double v) {
    if (!on_grid(v, h)) throw ValidationError("step", "must divide window endpoints");
  };
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& task = plan.tasks[i];
    need(task.window.lo);
    need(task.window.hi);
    need(task.cumulative.lo);
    need(task.cumulative.hi);
    if (plan.settings[i].t_star) need(*plan.settings[i].t_star);
    if (task.kind == TaskKind::eventually && !task.window.bounded())
      need(task.window.lo + plan.policy.unbounded_horizon);
  }
}

HybridState initialize(const TaskPlan& plan, const Eigen::VectorXd& x0) {
  if (plan.tasks.empty()) throw FragmentViolation("formula yields no tasks");
  HybridState z;
  z.q = 1;
  z.x = x0;
  z.params = select_funnel_parameters(plan.tasks.front(), x0, plan.settings.front(), 0.0,
                                      plan.kind.p, plan.rho_opt.front(), plan.smooth, plan.policy);
  return z;
}

JumpCheck jump_condition(const HybridState& z, const TaskPlan& plan, double time_tol) {
  const AtomicTask& task = task_at(plan, z.q);
  const double shift = plan.kind.p * z.delta;
  JumpCheck out;
  out.rho = smooth_robustness(task.body, z.x, plan.smooth).value;
  const bool in_set = out.rho > z.params.r && out.rho < z.params.rho_max;

  if (task.kind == TaskKind::always) {
    if (!task.window.bounded()) return out;
    const double deadline = task.window.hi - shift;
    if (z.t < deadline - time_tol) return out;
    if (z.t > deadline + time_tol || !in_set) {
      out.decision = JumpDecision::fault;
      out.reason = "always-task deadline t=" + num(deadline) + " reached with rho=" +
                   num(out.rho) + " outside (" + num(z.params.r) + ", " +
                   num(z.params.rho_max) + ")";
      return out;
    }
    out.decision = JumpDecision::jump;
    return out;
  }

  const double lo = task.window.lo - shift;
  const double hi = z.params.t_star - shift;
  if (z.t >= lo - time_tol && z.t <= hi + time_tol && in_set) {
    out.decision = JumpDecision::jump;
  } else if (z.t > hi + time_tol) {
    out.decision = JumpDecision::fault;
    out.reason = "eventually-window closed at local t=" + num(hi) + " with rho=" + num(out.rho) +
                 " <= r=" + num(z.params.r);
  }
  return out;
}

std::pair<HybridState, JumpRecord> jump(const HybridState& z, const TaskPlan& plan,
                                        double time_tol) {
  const AtomicTask& task = task_at(plan, z.q);
  JumpRecord rec;
  rec.from_q = z.q;
  rec.to_q = z.q + 1;
  rec.local_time = z.t;
  rec.global_time = z.delta + z.t;
  rec.x = z.x;
  rec.rho = smooth_robustness(task.body, z.x, plan.smooth).value;
  const Window& w = task.window;
  if (plan.kind.p == 1) {
    rec.window_ok = rec.global_time >= w.lo - time_tol && rec.global_time <= w.hi + time_tol;
  } else if (task.kind == TaskKind::eventually) {
    rec.window_ok = rec.local_time >= w.lo - time_tol && rec.local_time <= w.hi + time_tol;
  } else {
    rec.window_ok = std::abs(rec.local_time - w.hi) <= time_tol;
  }

  HybridState next;
  next.q = z.q + 1;
  next.x = z.x;
  next.t = 0.0;
  next.delta = rec.global_time;
  next.params = z.params;
  if (next.q <= plan.size()) {
    const std::size_t i = next.q - 1;
    next.params = select_funnel_parameters(plan.tasks[i], next.x, plan.settings[i], next.delta,
                                           plan.kind.p, plan.rho_opt[i], plan.smooth, plan.policy);
  }
  return {std::move(next), std::move(rec)};
}

RunResult run(const Simulation& sim) {
  const TaskPlan& plan = sim.plan;
  const std::size_t n_tasks = plan.size();
  const double h = sim.step;
  validate_step(plan, h);
  if (static_cast<std::size_t>(sim.x0.size()) != sim.system.n)
    throw ValidationError("x0", "has " + std::to_string(sim.x0.size()) + " entries, system has " +
                                    std::to_string(sim.system.n) + " states");

  const double hz = horizon(sim.formula);
  double end_time = 0.0;
  if (std::isfinite(hz)) {
    end_time = std::max(hz, sim.duration.value_or(0.0));
  } else {
    if (!sim.duration) throw ValidationError("duration", "required when the horizon is unbounded");
    end_time = *sim.duration;
  }
  const auto last_step = static_cast<long long>(std::ceil(end_time / h - 1e-9));

  RunResult res;
  RunReport& rep = res.report;
  rep.rho_opt = plan.rho_opt;
  rep.saturation = sim.saturation;
  rep.seed = sim.disturbance.seed;
  rep.disturbance_kind = to_string(sim.disturbance.kind);
  rep.disturbance_bound = sim.disturbance.bound;
  rep.step = h;
  rep.k = plan.smooth.k;
  rep.end_time = static_cast<double>(last_step) * h;
  res.trajectory.samples.reserve(static_cast<std::size_t>(last_step) + 1);

  DisturbanceSource disturbance(sim.disturbance, sim.system.n);
  const double tol = 1e-9 * std::max(1.0, h);

  try {
    HybridState z = initialize(plan, sim.x0);
    rep.params.push_back({1, 0.0, smooth_robustness(plan.tasks[0].body, sim.x0, plan.smooth).value,
                          z.params});
    long long k_delta = 0;

    for (long long k = 0;; ++k) {
      const double time = static_cast<double>(k) * h;
      z.delta = static_cast<double>(k_delta) * h;
      z.t = static_cast<double>(k - k_delta) * h;

      while (z.q <= n_tasks) {
        const double rho = smooth_robustness(task_at(plan, z.q).body, z.x, plan.smooth).value;
        const FunnelMargins m = funnel_margins(rho, z.params, z.t);
        if (!(m.upper > kFunnelGuard)) throw FunnelViolation(FunnelSide::upper, m.upper);
        if (!(m.lower > kFunnelGuard)) throw FunnelViolation(FunnelSide::lower, m.lower);
        const JumpCheck chk = jump_condition(z, plan, tol);
        if (chk.decision == JumpDecision::fault) throw HybridFault(z.q, chk.reason);
        if (chk.decision == JumpDecision::stay) break;
        auto [next, rec] = jump(z, plan, tol);
        rec.global_time = time;
        rep.jumps.push_back(std::move(rec));
        z = std::move(next);
        k_delta = k;
        z.delta = time;
        if (z.q <= n_tasks) {
          rep.params.push_back(
              {z.q, time, smooth_robustness(task_at(plan, z.q).body, z.x, plan.smooth).value,
               z.params});
        }
      }

      const std::size_t active = std::min(z.q, n_tasks);
      const ControlInput ctrl =
          control_input(sim.system, task_at(plan, active).body, z.params, z.x, z.t, plan.smooth);
      Eigen::VectorXd w = disturbance.sample(time);

      TrajectorySample s;
      s.time = time;
      s.mode = z.q;
      s.x = z.x;
      s.rho = ctrl.rho;
      s.funnel_lo = z.params.lower(z.t);
      s.funnel_hi = z.params.upper();
      s.u = ctrl.u;
      s.w = w;
      if (z.q <= n_tasks) {
        rep.min_lower_margin = std::min(rep.min_lower_margin, s.rho - s.funnel_lo);
        rep.min_upper_margin = std::min(rep.min_upper_margin, s.funnel_hi - s.rho);
      }
      const double u_inf = ctrl.u.size() ? ctrl.u.lpNorm<Eigen::Infinity>() : 0.0;
      rep.max_u_inf = std::max(rep.max_u_inf, u_inf);
      if (sim.saturation && u_inf > *sim.saturation) ++rep.saturation_exceedances;
      res.trajectory.samples.push_back(std::move(s));

      if (k == last_step) break;
      z.x = integrate_step(sim.system, ctrl.u, w, z.x, h);
    }

    rep.final_mode = z.q;
    rep.completed = z.q == n_tasks + 1;
    if (std::isfinite(hz) && !rep.completed)
      throw HybridFault(z.q, "horizon reached before the task sequence completed");
  } catch (const Error& e) {
    rep.n_samples = res.trajectory.samples.size();
    rep.error = e.what();
    std::string what = e.what();
    std::string module = e.module();
    std::string kind = e.kind();
    throw RunAborted(what, std::move(module), std::move(kind), std::move(res));
  }

  rep.n_samples = res.trajectory.samples.size();
  rep.r_min = kInf;
  rep.rho_max_min = kInf;
  for (const auto& p : rep.params) {
    rep.r_min = std::min(rep.r_min, p.params.r);
    rep.rho_max_min = std::min(rep.rho_max_min, p.params.rho_max);
  }
  if (std::isfinite(hz)) {
    rep.monitor = exact_robustness(sim.formula, res.trajectory.signal(), 0.0);
    rep.claim_holds = rep.r_min < *rep.monitor && *rep.monitor < rep.rho_max_min;
  }
  return res;
}

}  // namespace stlppc
