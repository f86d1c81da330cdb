#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stlppc/dynamics.hpp"
#include "stlppc/funnel.hpp"
#include "stlppc/hybrid.hpp"
#include "stlppc/robustness.hpp"
#include "stlppc/stl_ast.hpp"

namespace stlppc {

/// A validated scenario file. The dialect is INI:
///
///   name = ...            formula = ...          x0 = 1 2 3
///   [system]              kind = consensus | single_integrator, laplacian = rows split by ';',
///                         dims_per_agent, dimension
///   [simulation]          step, seed, smoothing_k, box_bound (number or "none"),
///                         duration, saturation
///   [disturbance]         kind = zero | uniform | sinusoidal, bound
///   [policy]              eta, gamma0_margin, gamma_inf_fraction, l_free, unbounded_horizon
///   [atom NAME]           kind = halfspace (normal, offset) | inf_ball (selector, center,
///                         radius); scale. Selector indices are 1-based.
///   [task Q]              r, rho_max, t_star
///   [output]              directory
struct Scenario {
  std::string name;
  std::string formula_text;
  AtomTable atoms;
  FormulaNode formula;
  FlattenResult flat;
  SystemModel system;
  Eigen::VectorXd x0;
  double step = 0.01;
  SmoothConfig smooth;
  std::optional<double> box_bound = 100.0;
  std::optional<double> duration;
  std::optional<double> saturation;
  DisturbanceSpec disturbance;
  SelectionPolicy policy;
  std::vector<TaskSettings> tasks;
  std::filesystem::path output_dir;
};

/// Parses and validates scenario text. Throws ParseError(line, key) for
/// malformed input and ValidationError(key, reason) for semantic problems.
Scenario parse_scenario(std::string_view text, const std::string& default_name = "scenario");

Scenario load_scenario(const std::filesystem::path& path);

/// A path that exists is used as-is; a bare name maps to scenarios/<name>.ini.
std::filesystem::path resolve_scenario(const std::string& arg);

/// Estimates rho_opt for every task and assembles the run input.
Simulation make_simulation(const Scenario& scenario, const OptimumOptions& options = {});

/// Formula and atoms only, for monitoring. Reads the same dialect; `dim` is
/// the state dimension the atoms must match (0 skips the check).
struct FormulaFile {
  std::string text;
  AtomTable atoms;
  FormulaNode formula;
  double t0 = 0.0;
};

FormulaFile parse_formula_file(std::string_view text, std::size_t dim);

FormulaFile load_formula_file(const std::filesystem::path& path, std::size_t dim);

}  // namespace stlppc
