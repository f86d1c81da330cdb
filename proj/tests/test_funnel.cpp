#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"

#include "stlppc/errors.hpp"
#include "stlppc/funnel.hpp"

using namespace stlppc;
using namespace testsupport;

namespace {

FunnelParams constant_funnel(double rho_max, double gamma) {
  FunnelParams p;
  p.rho_max = rho_max;
  p.perf = {gamma, gamma, 0.0};
  return p;
}

}  // namespace

TEST_CASE("performance function values") {
  const PerformanceFunction g{2.0, 0.1, 0.5};
  CHECK(performance_value(g, 0).gamma == 2.0);
  CHECK(std::abs(performance_value(g, 200).gamma - 0.1) <= 1e-12);
  CHECK(performance_value(g, 2).gamma == doctest::Approx(0.7989709382257404).epsilon(1e-14));
  CHECK(performance_value(g, 2).gamma_dot == doctest::Approx(-0.5 * 1.9 * std::exp(-1.0)));
  CHECK(g.derivative(3.0) == performance_value(g, 3.0).gamma_dot);
}

TEST_CASE("transformation at the midpoint and at symmetric points") {
  const auto mid = transform_error(0.5, constant_funnel(1.0, 1.0), 0.0);
  CHECK(mid.e == doctest::Approx(-0.5));
  CHECK(mid.xi == doctest::Approx(-0.5));
  CHECK(mid.eps == doctest::Approx(0.0));
  CHECK(transform_xi(-0.2) == doctest::Approx(1.3862943611198906).epsilon(1e-14));
  CHECK(transform_xi(-0.8) == doctest::Approx(-1.3862943611198906).epsilon(1e-14));
}

TEST_CASE("transformation rejects points outside the funnel") {
  const auto p = constant_funnel(1.0, 1.0);
  CHECK_THROWS_AS(transform_error(1.0, p, 0.0), FunnelViolation);
  CHECK_THROWS_AS(transform_error(0.0, p, 0.0), FunnelViolation);
  try {
    transform_error(-0.1, p, 0.0);
  } catch (const FunnelViolation& e) {
    CHECK(e.side() == FunnelSide::lower);
    CHECK(e.margin() == doctest::Approx(-0.1));
  }
  try {
    transform_error(1.5, p, 0.0);
  } catch (const FunnelViolation& e) {
    CHECK(e.side() == FunnelSide::upper);
  }
  const auto m = funnel_margins(0.25, p, 0.0);
  CHECK(m.lower == doctest::Approx(0.25));
  CHECK(m.upper == doctest::Approx(0.75));
}

TEST_CASE("parameter selection on the constrained branch") {
  const auto p = design_funnel(1, -0.9, 5.0, 5.0, 0.0, 1.0, 1.2, {});
  CHECK(p.rho_max == 1.0);
  CHECK(p.perf.gamma0 == doctest::Approx(2.09));
  CHECK(p.perf.gamma_inf == doctest::Approx(0.1));
  CHECK(p.perf.l == doctest::Approx(0.15869903087884546).epsilon(1e-12));
  CHECK(std::abs(p.lower(5.0) - 0.0) <= 1e-12);
}

TEST_CASE("parameter selection from a state") {
  // body value at x is -0.9
  const auto a = halfspace("h", {1, 0}, 0.1);
  AtomicTask task;
  task.kind = TaskKind::eventually;
  task.window = {0, 5};
  task.cumulative = task.window;
  task.body = FormulaNode::predicate(a);
  TaskSettings s;
  s.r = 0.0;
  s.rho_max = 1.0;
  const auto p = select_funnel_parameters(task, vec({1.0, 0.0}), s, 0.0, 1, 1.2, {}, {});
  CHECK(p.t_star == 5.0);
  CHECK(p.deadline == 5.0);
  CHECK(p.perf.gamma0 == doctest::Approx(2.09));
  CHECK(p.perf.l == doctest::Approx(0.15869903087884546).epsilon(1e-12));
}

TEST_CASE("deadline now with robustness at or below r is infeasible") {
  CHECK_THROWS_AS(design_funnel(1, -0.5, 0.0, 0.0, 0.0, std::nullopt, 1.0, {}), InfeasibleTask);
  CHECK_THROWS_AS(design_funnel(1, 0.0, 0.0, 0.0, 0.0, std::nullopt, 1.0, {}), InfeasibleTask);
}

TEST_CASE("deadline now with robustness above r keeps the free decay") {
  const auto p = design_funnel(1, 0.2, 0.0, 0.0, 0.0, 1.0, 1.5, {});
  CHECK(p.perf.gamma0 > 0.8);
  CHECK(p.perf.gamma0 <= 1.0);
  CHECK(p.perf.gamma0 == doctest::Approx(0.88));
  CHECK(p.perf.l == 0.1);
}

TEST_CASE("deadline now caps gamma0 at rho_max - r") {
  // span 0.8 * 1.1 = 0.88 exceeds rho_max - r = 0.85
  const auto p = design_funnel(1, 0.2, 0.0, 0.0, 0.15, 1.0, 1.5, {});
  CHECK(p.perf.gamma0 == doctest::Approx(0.85));
  CHECK(p.lower(0.0) >= 0.15 - 1e-12);
}

TEST_CASE("selection errors") {
  CHECK_THROWS_AS(design_funnel(2, 0.0, -1.0, 0.0, 0.0, std::nullopt, 1.0, {}), DeadlinePassed);
  CHECK_THROWS_AS(design_funnel(2, 0.0, 1.0, 1.0, 0.5, std::nullopt, 0.4, {}), InfeasibleTask);
  CHECK_THROWS_AS(design_funnel(2, 0.0, 1.0, 1.0, 0.0, 1.5, 1.0, {}), InvalidRhoMax);
  CHECK_THROWS_AS(design_funnel(2, 0.0, 1.0, 1.0, 0.0, -0.1, 1.0, {}), InvalidRhoMax);
  try {
    design_funnel(3, -1.0, 0.0, 0.0, 0.0, std::nullopt, 1.0, {});
  } catch (const InfeasibleTask& e) {
    CHECK(e.task() == 3);
  }
}

TEST_CASE("a request at or below the current robustness falls back to the default") {
  const auto p = design_funnel(1, 0.5, 3.0, 3.0, 0.0, 0.4, 1.0, {});
  CHECK(p.rho_max == doctest::Approx(0.5 + 0.9 * 0.5));
}

TEST_CASE("default rho_max lies between the current robustness and the optimum") {
  const auto p = design_funnel(1, -2.0, 3.0, 3.0, 0.1, std::nullopt, 1.0, {});
  CHECK(p.rho_max == doctest::Approx(0.9));
  CHECK(p.rho_max > 0.1);
}

TEST_CASE("t_star policy") {
  AtomicTask ev;
  ev.kind = TaskKind::eventually;
  ev.window = {2, 6};
  AtomicTask al;
  al.kind = TaskKind::always;
  al.window = {3, 9};
  CHECK(choose_t_star(ev, {}, {}) == 6.0);
  CHECK(choose_t_star(al, {}, {}) == 3.0);
  TaskSettings s;
  s.t_star = 4.0;
  CHECK(choose_t_star(ev, s, {}) == 4.0);
  s.t_star = 7.0;
  CHECK_THROWS_AS(choose_t_star(ev, s, {}), InfeasibleTask);
  ev.window = {2, kInf};
  CHECK(choose_t_star(ev, {}, {}) == 12.0);
}

TEST_CASE("policy validation names the field") {
  SelectionPolicy p;
  p.eta = 1.0;
  try {
    p.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.key() == "eta");
  }
  p = {};
  p.gamma_inf_fraction = 0.0;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  p = {};
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("property: gamma is non-increasing") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    const double ginf = 0.01 + u(rng);
    const PerformanceFunction g{ginf + 5 * u(rng), ginf, 3 * u(rng)};
    const double t1 = 20 * u(rng), t2 = t1 + 20 * u(rng);
    CHECK(g.value(t1) >= g.value(t2));
    CHECK(g.derivative(t1) <= 0.0);
  }
}

TEST_CASE("property: S is strictly increasing and diverges at the ends") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-1, 0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(rng), b = u(rng);
    if (a == b || a == -1.0 || b == -1.0) continue;
    if (a > b) std::swap(a, b);
    CHECK(transform_xi(a) < transform_xi(b));
  }
  CHECK(transform_xi(-1 + 1e-9) < -20);
  CHECK(transform_xi(-1e-9) > 20);
}

TEST_CASE("property: selected parameters start inside and reach r by the deadline") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0, 1);
  int constrained = 0;
  for (int i = 0; i < 1000; ++i) {
    const double rho_opt = 0.1 + 5 * u(rng);
    const double r = 0.9 * rho_opt * u(rng);
    const double tau = (i % 10 == 0) ? 0.0 : 0.5 + 20 * u(rng);
    // tau = 0 needs rho > r
    const double rho = tau == 0.0 ? r + (rho_opt - r) * (0.05 + 0.9 * u(rng))
                                  : -10 * u(rng) + (rho_opt - 1e-3) * u(rng);
    const auto p = design_funnel(1, rho, tau, tau, r, std::nullopt, rho_opt, {});
    const double xi0 = (rho - p.rho_max) / p.perf.value(0.0);
    CHECK(xi0 > -1.0);
    CHECK(xi0 < 0.0);
    CHECK(-p.perf.value(tau) + p.rho_max >= r - 1e-9);
    CHECK(p.rho_max < rho_opt);
    if (-p.perf.gamma0 + p.rho_max < r) {
      ++constrained;
      CHECK(std::abs(-p.perf.value(tau) + p.rho_max - r) <= 1e-9);
    }
  }
  CHECK(constrained > 300);
}
