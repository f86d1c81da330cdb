#include "stlppc/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "CLI11.hpp"

#include "stlppc/errors.hpp"
#include "stlppc/hybrid.hpp"
#include "stlppc/io.hpp"
#include "stlppc/scenario.hpp"

namespace stlppc {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : format_number(v);
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("output", "cannot write '" + path.string() + "'");
  writer(out);
}

void write_outputs(const std::filesystem::path& dir, const Scenario& sc, const RunResult& res) {
  std::filesystem::create_directories(dir);
  write_file(dir / "trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, res.trajectory); });
  write_file(dir / "funnel.csv", [&](std::ostream& o) { write_funnel_csv(o, res.trajectory); });
  write_file(dir / "paths.csv",
             [&](std::ostream& o) { write_paths_csv(o, res.trajectory, sc.system); });
  write_file(dir / "inputs.csv", [&](std::ostream& o) { write_inputs_csv(o, res.trajectory); });
  write_file(dir / "report.json",
             [&](std::ostream& o) { o << report_json(res.report, sc.name, sc.formula_text); });
}

int cmd_run(const std::string& scenario_arg, std::optional<std::uint64_t> seed,
            const std::string& out_dir, std::ostream& out, std::ostream& err) {
  Scenario sc = load_scenario(resolve_scenario(scenario_arg));
  if (seed) sc.disturbance.seed = *seed;
  const std::filesystem::path dir = out_dir.empty() ? sc.output_dir : std::filesystem::path(out_dir);
  const Simulation sim = make_simulation(sc);
  RunResult res;
  try {
    res = run(sim);
  } catch (const RunAborted& e) {
    write_outputs(dir, sc, e.partial());
    err << "error: " << e.what() << "\n";
    err << "partial results written to " << dir.string() << "\n";
    return kExitError;
  }
  write_outputs(dir, sc, res);

  const RunReport& rep = res.report;
  out << "scenario " << sc.name << ": " << rep.jumps.size() << " jumps, final mode "
      << rep.final_mode << "\n";
  for (const auto& j : rep.jumps) {
    out << "  jump " << j.from_q << "->" << j.to_q << " at t=" << shortest(j.global_time)
        << (j.window_ok ? " (in window)" : " (OUTSIDE window)") << "\n";
  }
  out << "max |u|_inf = " << shortest(rep.max_u_inf) << "\n";
  if (rep.saturation_exceedances)
    out << "saturation bound exceeded at " << rep.saturation_exceedances << " samples\n";
  if (rep.monitor) out << "robustness = " << shortest(*rep.monitor) << "\n";
  out << "outputs in " << dir.string() << "\n";
  if (rep.monitor && !(*rep.monitor > 0.0)) return kExitNotSatisfied;
  return kExitSatisfied;
}

int cmd_monitor(const std::string& trace, const std::string& formula_file,
                std::optional<double> t0, std::ostream& out) {
  const SampledSignal sig = read_trajectory_csv(std::filesystem::path(trace));
  const std::size_t dim = sig.states.empty() ? 0 : static_cast<std::size_t>(sig.states[0].size());
  const FormulaFile ff = load_formula_file(formula_file, dim);
  const double value = exact_robustness(ff.formula, sig, t0.value_or(ff.t0));
  out << shortest(value) << "\n";
  return value > 0.0 ? kExitSatisfied : kExitNotSatisfied;
}

int cmd_check(const std::string& scenario_arg, std::ostream& out) {
  const Scenario sc = load_scenario(resolve_scenario(scenario_arg));
  out << "scenario " << sc.name << ": " << sc.system.description << ", "
      << sc.flat.tasks.size() << " tasks (p=" << sc.flat.kind.p << ")\n";
  const double gain = min_input_gain(sc.system, sc.box_bound.value_or(100.0), 200, sc.disturbance.seed);
  if (!(gain > 0.0))
    throw ValidationError("system", "g g^T is singular at a sampled state (min eigenvalue " +
                                        shortest(gain) + ")");
  out << "input map: min eigenvalue of g g^T = " << shortest(gain) << "\n";
  const Simulation sim = make_simulation(sc);
  for (std::size_t i = 0; i < sim.plan.size(); ++i)
    out << "  task " << i + 1 << ": rho_opt = " << shortest(sim.plan.rho_opt[i]) << "\n";
  const HybridState z = initialize(sim.plan, sim.x0);
  out << "task 1 feasible: rho_max=" << shortest(z.params.rho_max)
      << " gamma0=" << shortest(z.params.perf.gamma0)
      << " gamma_inf=" << shortest(z.params.perf.gamma_inf) << " l=" << shortest(z.params.perf.l)
      << "\n";
  return kExitSatisfied;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Funnel-based control synthesis for signal temporal logic tasks", "stlppc"};
  app.require_subcommand(1);

  std::string scenario_arg;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  auto* run_cmd = app.add_subcommand("run", "simulate a scenario and write trajectory, funnels and report");
  run_cmd->add_option("scenario", scenario_arg, "scenario file or name under scenarios/")->required();
  run_cmd->add_option("--seed", seed, "override the disturbance seed");
  run_cmd->add_option("--out", out_dir, "output directory");

  std::string trace;
  std::string formula_file;
  std::optional<double> t0;
  auto* mon_cmd = app.add_subcommand("monitor", "exact robustness of a trajectory CSV");
  mon_cmd->add_option("trace", trace, "trajectory CSV")->required();
  mon_cmd->add_option("--formula", formula_file, "file with formula and atom sections")->required();
  mon_cmd->add_option("--t0", t0, "evaluation time");

  std::string check_arg;
  auto* check_cmd = app.add_subcommand("check", "validate a scenario without simulating");
  check_cmd->add_option("scenario", check_arg, "scenario file or name under scenarios/")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitSatisfied;
  } catch (const CLI::ParseError& e) {
    err << "cli: " << e.what() << "\n" << app.help();
    return kExitError;
  }

  try {
    if (*run_cmd) return cmd_run(scenario_arg, seed, out_dir, out, err);
    if (*mon_cmd) return cmd_monitor(trace, formula_file, t0, out);
    if (*check_cmd) return cmd_check(check_arg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace stlppc
