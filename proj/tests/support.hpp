#pragma once

// Helpers shared by the unit tests and the acceptance binary: random atoms,
// bodies and fragment formulas, and an independent brute-force monitor.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stlppc/robustness.hpp"
#include "stlppc/stl_ast.hpp"

namespace testsupport {

using stlppc::AtomTable;
using stlppc::FormulaNode;
using stlppc::PredicateAtom;
using stlppc::SampledSignal;

inline std::shared_ptr<const PredicateAtom> halfspace(const std::string& name,
                                                      std::vector<double> normal, double offset,
                                                      double scale = 1.0) {
  Eigen::VectorXd n = Eigen::Map<Eigen::VectorXd>(normal.data(), static_cast<Eigen::Index>(normal.size()));
  return std::make_shared<const PredicateAtom>(PredicateAtom::halfspace(name, n, offset, scale));
}

inline std::shared_ptr<const PredicateAtom> ball(const std::string& name,
                                                 std::vector<std::size_t> selector,
                                                 std::vector<double> center, double radius,
                                                 double scale = 1.0) {
  Eigen::VectorXd c = Eigen::Map<Eigen::VectorXd>(center.data(), static_cast<Eigen::Index>(center.size()));
  return std::make_shared<const PredicateAtom>(
      PredicateAtom::inf_ball(name, std::move(selector), c, radius, scale));
}

inline AtomTable table(std::initializer_list<std::shared_ptr<const PredicateAtom>> atoms) {
  AtomTable t;
  for (const auto& a : atoms) t.emplace(a->name, a);
  return t;
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

/// Random halfspace atoms in `dim` dimensions, named h0, h1, ...
inline std::vector<std::shared_ptr<const PredicateAtom>> random_halfspaces(std::mt19937_64& rng,
                                                                           std::size_t count,
                                                                           std::size_t dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::shared_ptr<const PredicateAtom>> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> n(dim);
    for (auto& v : n) v = u(rng);
    out.push_back(halfspace("h" + std::to_string(i), n, 2.0 * u(rng), 0.5 + std::abs(u(rng))));
  }
  return out;
}

/// Conjunction of 1..max_lits literals over `atoms`, some negated.
inline FormulaNode random_body(std::mt19937_64& rng,
                               const std::vector<std::shared_ptr<const PredicateAtom>>& atoms,
                               std::size_t max_lits, bool allow_negation = true) {
  std::uniform_int_distribution<std::size_t> count(1, max_lits);
  std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1);
  std::bernoulli_distribution neg(allow_negation ? 0.3 : 0.0);
  const std::size_t n = count(rng);
  std::vector<FormulaNode> lits;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = atoms[pick(rng)];
    lits.push_back(neg(rng) ? FormulaNode::neg_predicate(a) : FormulaNode::predicate(a));
  }
  if (lits.size() == 1) return lits.front();
  return FormulaNode::conjunction(std::move(lits));
}

/// Integer-valued window [lo, lo + len] with lo in [0, max_lo], len in [0, max_len].
inline stlppc::Window random_window(std::mt19937_64& rng, int max_lo, int max_len) {
  std::uniform_int_distribution<int> lo(0, max_lo);
  std::uniform_int_distribution<int> len(0, max_len);
  const double a = lo(rng);
  return {a, a + len(rng)};
}

inline FormulaNode random_atomic(std::mt19937_64& rng,
                                 const std::vector<std::shared_ptr<const PredicateAtom>>& atoms,
                                 stlppc::Window w) {
  std::bernoulli_distribution always(0.5);
  FormulaNode body = random_body(rng, atoms, 3);
  return always(rng) ? FormulaNode::always(w.lo, w.hi, std::move(body))
                     : FormulaNode::eventually(w.lo, w.hi, std::move(body));
}

/// A random formula of the fragment with temporal nesting depth <= max_depth
/// (an atomic formula, a time-ordered conjunction, or a nested chain).
inline FormulaNode random_formula(std::mt19937_64& rng,
                                  const std::vector<std::shared_ptr<const PredicateAtom>>& atoms,
                                  std::size_t max_depth = 3) {
  std::uniform_int_distribution<int> shape(0, 2);
  switch (shape(rng)) {
    case 0:
      return random_atomic(rng, atoms, random_window(rng, 3, 4));
    case 1: {
      std::uniform_int_distribution<int> n(2, 3);
      const int count = n(rng);
      std::vector<FormulaNode> parts;
      double start = 0.0;
      for (int i = 0; i < count; ++i) {
        stlppc::Window w = random_window(rng, 2, 3);
        w.lo += start;
        w.hi += start;
        start = w.hi;
        parts.push_back(random_atomic(rng, atoms, w));
      }
      return FormulaNode::seq_conj(std::move(parts));
    }
    default: {
      std::uniform_int_distribution<std::size_t> n(2, std::max<std::size_t>(2, max_depth));
      const std::size_t depth = n(rng);
      std::vector<stlppc::Window> steps;
      std::vector<FormulaNode> bodies;
      for (std::size_t i = 0; i + 1 < depth; ++i) {
        steps.push_back(random_window(rng, 2, 2));
        bodies.push_back(random_body(rng, atoms, 2));
      }
      FormulaNode terminal = random_atomic(rng, atoms, random_window(rng, 2, 3));
      return FormulaNode::seq_nest(std::move(steps), std::move(bodies), std::move(terminal));
    }
  }
}

/// Strictly increasing random times on [0, duration] with both ends present.
inline SampledSignal random_trace(std::mt19937_64& rng, std::size_t samples, double duration,
                                  std::size_t dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> s(-2.0, 2.0);
  std::vector<double> times{0.0, duration};
  while (times.size() < samples) times.push_back(duration * u(rng));
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  SampledSignal sig;
  sig.times = times;
  for (std::size_t i = 0; i < times.size(); ++i) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(dim));
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = s(rng);
    sig.states.push_back(x);
  }
  return sig;
}

// ---- brute-force monitor ----------------------------------------------------
//
// Evaluates every window extremum from scratch: nearest sample in time (ties to
// the earlier one), closed windows, nested chains read inside out.

class BruteMonitor {
public:
  explicit BruteMonitor(const SampledSignal& sig) : sig_(sig) {}

  /// NaN when the formula needs samples past the end of the trace.
  double at_time(const FormulaNode& f, double t) const { return at(f, nearest(t)); }

private:
  const SampledSignal& sig_;

  std::size_t nearest(double t) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < sig_.times.size(); ++i)
      if (std::abs(sig_.times[i] - t) < std::abs(sig_.times[best] - t)) best = i;
    return best;
  }

  bool covered(double t_end) const {
    const double last = sig_.times.back();
    return t_end <= last + 1e-9 * std::max(1.0, std::abs(last));
  }

  double state_value(const FormulaNode& f, const Eigen::VectorXd& x) const {
    using K = FormulaNode::Kind;
    switch (f.kind) {
      case K::truth: return std::numeric_limits<double>::infinity();
      case K::predicate: return f.atom->evaluate(x);
      case K::neg_predicate: return -f.atom->evaluate(x);
      case K::conjunction: {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& c : f.children) m = std::min(m, state_value(c, x));
        return m;
      }
      default: return std::numeric_limits<double>::quiet_NaN();
    }
  }

  template <class Inner>
  double window(std::size_t i, stlppc::Window w, bool take_min, Inner inner) const {
    const double t = sig_.times[i];
    if (!covered(t + w.hi)) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t j0 = nearest(t + w.lo);
    const std::size_t j1 = nearest(t + w.hi);
    double acc = take_min ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
    for (std::size_t j = j0; j <= j1; ++j) {
      const double v = inner(j);
      if (std::isnan(v)) return v;
      acc = take_min ? std::min(acc, v) : std::max(acc, v);
    }
    return acc;
  }

  double chain(const FormulaNode& f, std::size_t k, std::size_t i) const {
    if (k == f.step_windows.size()) return at(f.terminal(), i);
    return window(i, f.step_windows[k], false, [&](std::size_t j) {
      const double inner = chain(f, k + 1, j);
      return std::isnan(inner) ? inner : std::min(state_value(f.children[k], sig_.states[j]), inner);
    });
  }

  double at(const FormulaNode& f, std::size_t i) const {
    using K = FormulaNode::Kind;
    switch (f.kind) {
      case K::always:
        return window(i, f.window, true, [&](std::size_t j) { return at(f.children[0], j); });
      case K::eventually:
        return window(i, f.window, false, [&](std::size_t j) { return at(f.children[0], j); });
      case K::seq_conj: {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& c : f.children) {
          const double v = at(c, i);
          if (std::isnan(v)) return v;
          m = std::min(m, v);
        }
        return m;
      }
      case K::seq_nest:
        return chain(f, 0, i);
      default:
        return state_value(f, sig_.states[i]);
    }
  }
};

}  // namespace testsupport
