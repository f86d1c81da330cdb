#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "stlppc/dynamics.hpp"
#include "stlppc/hybrid.hpp"
#include "stlppc/robustness.hpp"

namespace stlppc {

/// Decimal text that round-trips a double exactly (%.17g).
std::string format_number(double v);

/// Columns: time, mode, x_1..x_n, rho_active, funnel_lo, funnel_hi, u_1..u_m,
/// w_1..w_n.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Reads the time and x_i columns of a trajectory CSV. Throws ParseError.
SampledSignal read_trajectory_csv(std::istream& in);
SampledSignal read_trajectory_csv(const std::filesystem::path& path);

/// time, mode, rho_active, funnel_lo, funnel_hi
void write_funnel_csv(std::ostream& out, const Trajectory& traj);

/// time, then agent_j_1..agent_j_d per agent (or x_i when not multi-agent).
void write_paths_csv(std::ostream& out, const Trajectory& traj, const SystemModel& sys);

/// time, mode, u_1..u_m, u_inf
void write_inputs_csv(std::ostream& out, const Trajectory& traj);

/// Report as pretty-printed JSON.
std::string report_json(const RunReport& report, const std::string& scenario_name,
                        const std::string& formula_text);

}  // namespace stlppc
