#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stlppc/controller.hpp"
#include "stlppc/dynamics.hpp"
#include "stlppc/funnel.hpp"
#include "stlppc/robustness.hpp"
#include "stlppc/stl_ast.hpp"

namespace stlppc {

/// Everything the automaton needs about the task sequence.
struct TaskPlan {
  SequenceKind kind;
  std::vector<AtomicTask> tasks;
  std::vector<TaskSettings> settings;  // one per task
  std::vector<double> rho_opt;         // one per task
  SmoothConfig smooth;
  SelectionPolicy policy;

  std::size_t size() const { return tasks.size(); }
};

/// Builds a plan from flattened tasks, estimating rho_opt for every body.
/// `settings` may be shorter than the task list; missing entries use defaults.
/// Throws InfeasibleTask when a body has a nonpositive smooth optimum.
TaskPlan make_plan(const FlattenResult& flat, std::vector<TaskSettings> settings,
                   const SmoothConfig& smooth, const SelectionPolicy& policy,
                   const Eigen::VectorXd& x_hint, const OptimumOptions& options = {});

/// Throws ValidationError("step", ...) unless h divides every finite window
/// endpoint the automaton can schedule on.
void validate_step(const TaskPlan& plan, double h);

/// z = (q, x, t, Delta, p_f). q runs over 1..N+1; in mode N+1 params is the
/// frozen copy of task N's parameters.
struct HybridState {
  std::size_t q = 1;
  Eigen::VectorXd x;
  double t = 0.0;
  double delta = 0.0;
  FunnelParams params;
};

struct JumpRecord {
  std::size_t from_q = 0;
  std::size_t to_q = 0;
  double global_time = 0.0;
  double local_time = 0.0;
  Eigen::VectorXd x;
  double rho = 0.0;
  bool window_ok = false;
};

enum class JumpDecision { stay, jump, fault };

struct JumpCheck {
  JumpDecision decision = JumpDecision::stay;
  double rho = 0.0;
  std::string reason;  // set for faults
};

HybridState initialize(const TaskPlan& plan, const Eigen::VectorXd& x0);

/// Requires z.q <= N. `time_tol` absorbs rounding in grid-derived times.
JumpCheck jump_condition(const HybridState& z, const TaskPlan& plan, double time_tol = 1e-9);

/// Applies the jump map. Parameters for the next task are re-selected at x
/// with Delta' = Delta + t.
std::pair<HybridState, JumpRecord> jump(const HybridState& z, const TaskPlan& plan,
                                        double time_tol = 1e-9);

struct Simulation {
  SystemModel system;
  TaskPlan plan;
  FormulaNode formula;  // monitored as written, without the box
  Eigen::VectorXd x0;
  double step = 0.01;
  std::optional<double> duration;
  DisturbanceSpec disturbance;
  std::optional<double> saturation;
};

struct TaskParamsRecord {
  std::size_t q = 0;
  double selected_at = 0.0;  // global time
  double rho_at_selection = 0.0;
  FunnelParams params;
};

struct RunReport {
  bool completed = false;
  std::size_t final_mode = 1;
  double end_time = 0.0;
  std::size_t n_samples = 0;
  std::vector<JumpRecord> jumps;
  std::vector<TaskParamsRecord> params;
  std::vector<double> rho_opt;
  double min_lower_margin = kInf;
  double min_upper_margin = kInf;
  double max_u_inf = 0.0;
  std::optional<double> saturation;
  std::size_t saturation_exceedances = 0;
  std::optional<double> monitor;  // exact robustness of the formula at t = 0
  double r_min = 0.0;
  double rho_max_min = 0.0;
  bool claim_holds = false;  // r_min < monitor < rho_max_min
  std::uint64_t seed = 0;
  std::string disturbance_kind;
  double disturbance_bound = 0.0;
  std::string generator = DisturbanceSource::generator_name();
  std::string integrator = "rk4";
  double step = 0.0;
  double k = 1.0;
  std::string error;  // set on aborted runs
};

struct RunResult {
  Trajectory trajectory;
  RunReport report;
};

/// Raised by run(); carries the trajectory and report up to the failure.
class RunAborted : public std::runtime_error {
public:
  RunAborted(const std::string& what, std::string module, std::string kind, RunResult partial)
      : std::runtime_error(what), module_(std::move(module)), kind_(std::move(kind)),
        partial_(std::move(partial)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& kind() const noexcept { return kind_; }
  const RunResult& partial() const noexcept { return partial_; }

private:
  std::string module_;
  std::string kind_;
  RunResult partial_;
};

/// Fixed-step closed-loop run until the formula horizon (or the configured
/// duration, whichever is later). Errors abort with RunAborted.
RunResult run(const Simulation& sim);

}  // namespace stlppc
