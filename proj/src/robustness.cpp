#include "stlppc/robustness.hpp"

#include <algorithm>
#include <cmath>

#include "stlppc/errors.hpp"

namespace stlppc {

double softmin(const std::vector<double>& values, double k, std::vector<double>* weights) {
  const double lo = values.empty() ? kInf : *std::min_element(values.begin(), values.end());
  if (weights) weights->assign(values.size(), 0.0);
  if (!std::isfinite(lo)) return lo;
  double sum = 0.0;
  for (double v : values) sum += std::exp(-k * (v - lo));
  if (weights) {
    for (std::size_t i = 0; i < values.size(); ++i)
      (*weights)[i] = std::exp(-k * (values[i] - lo)) / sum;
  }
  return lo - std::log(sum) / k;
}

namespace {

RobustnessResult eval_smooth(const FormulaNode& node, const Eigen::VectorXd& x, double k) {
  using K = FormulaNode::Kind;
  const auto n = x.size();
  switch (node.kind) {
    case K::truth:
      return {kInf, Eigen::VectorXd::Zero(n)};
    case K::predicate:
    case K::neg_predicate: {
      const PredicateAtom& atom = *node.atom;
      const double sign = node.kind == K::predicate ? 1.0 : -1.0;
      if (atom.kind == PredicateAtom::Kind::halfspace)
        return {sign * atom.evaluate(x), -sign * atom.scale * atom.normal};
      if (sign < 0) throw FragmentViolation("negated inf_ball '" + atom.name + "' is not concave");
      const auto parts = atom.halfspaces(static_cast<std::size_t>(n));
      std::vector<double> values;
      values.reserve(parts.size());
      for (const auto& h : parts) values.push_back(h.evaluate(x));
      std::vector<double> w;
      RobustnessResult r{softmin(values, k, &w), Eigen::VectorXd::Zero(n)};
      for (std::size_t i = 0; i < parts.size(); ++i)
        r.gradient -= w[i] * parts[i].scale * parts[i].normal;
      return r;
    }
    case K::conjunction: {
      std::vector<RobustnessResult> parts;
      std::vector<double> values;
      parts.reserve(node.children.size());
      for (const auto& c : node.children) {
        parts.push_back(eval_smooth(c, x, k));
        values.push_back(parts.back().value);
      }
      std::vector<double> w;
      RobustnessResult r{softmin(values, k, &w), Eigen::VectorXd::Zero(n)};
      for (std::size_t i = 0; i < parts.size(); ++i)
        if (w[i] > 0.0) r.gradient += w[i] * parts[i].gradient;
      return r;
    }
    default:
      throw FragmentViolation("smooth robustness is defined for non-temporal bodies only");
  }
}

}  // namespace

RobustnessResult smooth_robustness(const FormulaNode& body, const Eigen::VectorXd& x,
                                   const SmoothConfig& cfg) {
  if (!x.allFinite()) throw NonFiniteState("robustness", "state contains non-finite entries");
  if (!(cfg.k > 0.0)) throw FragmentViolation("smoothing temperature k must be positive");
  return eval_smooth(body, x, cfg.k);
}

double exact_state_robustness(const FormulaNode& body, const Eigen::VectorXd& x) {
  using K = FormulaNode::Kind;
  switch (body.kind) {
    case K::truth: return kInf;
    case K::predicate: return body.atom->evaluate(x);
    case K::neg_predicate: return -body.atom->evaluate(x);
    case K::conjunction: {
      double v = kInf;
      for (const auto& c : body.children) v = std::min(v, exact_state_robustness(c, x));
      return v;
    }
    default:
      throw FragmentViolation("state robustness is defined for non-temporal bodies only");
  }
}

// ---------------------------------------------------------------------------
// Offline monitor

std::size_t nearest_sample(const std::vector<double>& times, double t) {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  if (it == times.end()) return times.size() - 1;
  const auto hi = static_cast<std::size_t>(it - times.begin());
  return (times[hi] - t < t - times[hi - 1]) ? hi : hi - 1;
}

namespace {

double time_tolerance(const std::vector<double>& times) {
  return 1e-9 * std::max(1.0, std::abs(times.back()));
}

std::vector<double> window_extremum(const std::vector<double>& child, Window w, bool take_max,
                                    const SampledSignal& trace) {
  const auto& times = trace.times;
  const double tol = time_tolerance(times);
  std::vector<double> out;
  out.reserve(child.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] + w.hi > times.back() + tol) break;
    const std::size_t lo = nearest_sample(times, times[i] + w.lo);
    const std::size_t hi = nearest_sample(times, times[i] + w.hi);
    if (hi >= child.size()) break;
    double v = child[lo];
    for (std::size_t j = lo + 1; j <= hi; ++j) v = take_max ? std::max(v, child[j]) : std::min(v, child[j]);
    out.push_back(v);
  }
  return out;
}

std::vector<double> pointwise_min(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out(std::min(a.size(), b.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(a[i], b[i]);
  return out;
}

}  // namespace

std::vector<double> robustness_signal(const FormulaNode& node, const SampledSignal& trace) {
  using K = FormulaNode::Kind;
  if (trace.times.empty()) return {};
  switch (node.kind) {
    case K::truth:
    case K::predicate:
    case K::neg_predicate:
    case K::conjunction: {
      std::vector<double> out;
      out.reserve(trace.states.size());
      for (const auto& x : trace.states) out.push_back(exact_state_robustness(node, x));
      return out;
    }
    case K::always:
    case K::eventually:
      return window_extremum(robustness_signal(node.children.front(), trace), node.window,
                             node.kind == K::eventually, trace);
    case K::seq_conj: {
      std::vector<double> out = robustness_signal(node.children.front(), trace);
      for (std::size_t i = 1; i < node.children.size(); ++i)
        out = pointwise_min(out, robustness_signal(node.children[i], trace));
      return out;
    }
    case K::seq_nest: {
      // F[c1,d1](psi1 & F[c2,d2](psi2 & ... & phi_N)), evaluated inside out.
      std::vector<double> tail = robustness_signal(node.terminal(), trace);
      for (std::size_t k = node.step_windows.size(); k-- > 0;) {
        auto step = pointwise_min(robustness_signal(node.children[k], trace), tail);
        tail = window_extremum(step, node.step_windows[k], true, trace);
      }
      return tail;
    }
  }
  return {};
}

double exact_robustness(const FormulaNode& root, const SampledSignal& trace, double t0) {
  if (trace.times.empty()) throw InsufficientHorizon(t0 + horizon(root), -kInf);
  if (trace.times.size() != trace.states.size())
    throw FragmentViolation("trace times and states differ in length");
  const double needed = t0 + horizon(root);
  const double tol = time_tolerance(trace.times);
  if (needed > trace.times.back() + tol || t0 < trace.times.front() - tol)
    throw InsufficientHorizon(needed, trace.times.back());
  const auto signal = robustness_signal(root, trace);
  const std::size_t i0 = nearest_sample(trace.times, t0);
  if (i0 >= signal.size()) throw InsufficientHorizon(needed, trace.times.back());
  return signal[i0];
}

// ---------------------------------------------------------------------------
// Optimum search

namespace {

// Midpoint of the tightest axis-aligned bounds per coordinate; coordinates
// without bounds on both sides keep their value from `fallback`.
Eigen::VectorXd axis_bound_center(const FormulaNode& body, const Eigen::VectorXd& fallback) {
  const auto n = fallback.size();
  Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, kInf);
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, -kInf);
  std::vector<const FormulaNode*> stack{&body};
  while (!stack.empty()) {
    const FormulaNode* node = stack.back();
    stack.pop_back();
    for (const auto& c : node->children) stack.push_back(&c);
    if (!node->atom) continue;
    std::vector<PredicateAtom> parts = node->atom->halfspaces(static_cast<std::size_t>(n));
    const double sign = node->kind == FormulaNode::Kind::neg_predicate ? -1.0 : 1.0;
    for (const auto& h : parts) {
      Eigen::Index idx = 0;
      const Eigen::VectorXd nrm = sign * h.normal;
      if (nrm.size() != n || nrm.cwiseAbs().maxCoeff(&idx) <= 0.0) continue;
      if ((nrm.array() != 0.0).count() != 1) continue;
      // sign*(offset - a x_i) > 0
      const double bound = sign * h.offset / nrm(idx);
      if (nrm(idx) > 0) upper(idx) = std::min(upper(idx), bound);
      else lower(idx) = std::max(lower(idx), bound);
    }
  }
  Eigen::VectorXd c = fallback;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::isfinite(upper(i)) && std::isfinite(lower(i))) c(i) = 0.5 * (upper(i) + lower(i));
  return c;
}

bool has_inf_ball(const FormulaNode& body) {
  if (body.atom && body.atom->kind == PredicateAtom::Kind::inf_ball) return true;
  if (body.atom && body.atom->name.find('[') != std::string::npos) return true;  // desugared ball
  return std::any_of(body.children.begin(), body.children.end(), has_inf_ball);
}

OptimumEstimate ascend(const FormulaNode& body, Eigen::VectorXd x, const SmoothConfig& cfg,
                       const OptimumOptions& options) {
  constexpr double kArmijo = 1e-4;
  RobustnessResult cur = smooth_robustness(body, x, cfg);
  double step = 1.0;
  OptimumEstimate est;
  for (est.iterations = 0; est.iterations < options.max_iter; ++est.iterations) {
    if (cur.gradient.lpNorm<Eigen::Infinity>() < options.tol) {
      est.converged = true;
      break;
    }
    const double slope = cur.gradient.squaredNorm();
    bool accepted = false;
    while (step > 1e-300) {
      Eigen::VectorXd trial = x + step * cur.gradient;
      RobustnessResult next = smooth_robustness(body, trial, cfg);
      if (next.value >= cur.value + kArmijo * step * slope) {
        x = std::move(trial);
        cur = std::move(next);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no ascent possible at floating-point resolution
    step *= 2.0;
  }
  est.rho_opt = cur.value;
  est.argmax = std::move(x);
  if (!est.converged) est.converged = cur.gradient.lpNorm<Eigen::Infinity>() < options.tol;
  return est;
}

}  // namespace

OptimumEstimate maximize_smooth_robustness(const FormulaNode& body, const Eigen::VectorXd& x_init,
                                           const SmoothConfig& cfg, const OptimumOptions& options) {
  OptimumEstimate best = ascend(body, x_init, cfg, options);
  if (has_inf_ball(body)) {
    OptimumEstimate other = ascend(body, axis_bound_center(body, x_init), cfg, options);
    if (other.rho_opt > best.rho_opt) {
      other.iterations += best.iterations;
      best = std::move(other);
    }
  }
  return best;
}

OptimumEstimate estimate_optimum(const FormulaNode& body, const Eigen::VectorXd& x_init,
                                 const SmoothConfig& cfg, const OptimumOptions& options) {
  OptimumEstimate est = maximize_smooth_robustness(body, x_init, cfg, options);
  if (!(est.rho_opt > 0.0)) throw InfeasibleFormula(est.rho_opt);
  return est;
}

}  // namespace stlppc
