#include "stlppc/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "stlppc/errors.hpp"

namespace stlppc {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << format_number(v(i));
}

void put_names(std::ostream& out, const char* prefix, Eigen::Index count) {
  for (Eigen::Index i = 1; i <= count; ++i) out << ',' << prefix << i;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.samples.empty()) {
    out << "time,mode,rho_active,funnel_lo,funnel_hi\n";
    return;
  }
  const auto& first = traj.samples.front();
  out << "time,mode";
  put_names(out, "x_", first.x.size());
  out << ",rho_active,funnel_lo,funnel_hi";
  put_names(out, "u_", first.u.size());
  put_names(out, "w_", first.w.size());
  out << '\n';
  for (const auto& s : traj.samples) {
    out << format_number(s.time) << ',' << s.mode;
    put_vector(out, s.x);
    out << ',' << format_number(s.rho) << ',' << format_number(s.funnel_lo) << ','
        << format_number(s.funnel_hi);
    put_vector(out, s.u);
    put_vector(out, s.w);
    out << '\n';
  }
}

SampledSignal read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "", "empty trajectory file");
  const auto header = split_csv(line);
  std::ptrdiff_t time_col = -1;
  std::vector<std::size_t> x_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "time") time_col = static_cast<std::ptrdiff_t>(i);
    if (header[i].rfind("x_", 0) == 0) x_cols.push_back(i);
  }
  if (time_col < 0) throw ParseError(1, "time", "header has no time column");
  if (x_cols.empty()) throw ParseError(1, "x_1", "header has no state columns");

  SampledSignal sig;
  std::size_t line_no = 1;
  auto parse = [&](const std::string& cell, const std::string& key) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size())
      throw ParseError(line_no, key, "expected a number, got '" + cell + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw ParseError(line_no, "", "expected " + std::to_string(header.size()) + " columns");
    const double t = parse(cells[static_cast<std::size_t>(time_col)], "time");
    if (!sig.times.empty() && !(t > sig.times.back()))
      throw ParseError(line_no, "time", "times must be strictly increasing");
    Eigen::VectorXd x(static_cast<Eigen::Index>(x_cols.size()));
    for (std::size_t j = 0; j < x_cols.size(); ++j)
      x(static_cast<Eigen::Index>(j)) = parse(cells[x_cols[j]], header[x_cols[j]]);
    sig.times.push_back(t);
    sig.states.push_back(std::move(x));
  }
  return sig;
}

SampledSignal read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("trace", "cannot open '" + path.string() + "'");
  return read_trajectory_csv(in);
}

void write_funnel_csv(std::ostream& out, const Trajectory& traj) {
  out << "time,mode,rho_active,funnel_lo,funnel_hi\n";
  for (const auto& s : traj.samples) {
    out << format_number(s.time) << ',' << s.mode << ',' << format_number(s.rho) << ','
        << format_number(s.funnel_lo) << ',' << format_number(s.funnel_hi) << '\n';
  }
}

void write_paths_csv(std::ostream& out, const Trajectory& traj, const SystemModel& sys) {
  out << "time";
  if (sys.agents > 0) {
    for (std::size_t a = 1; a <= sys.agents; ++a)
      for (std::size_t d = 1; d <= sys.dims_per_agent; ++d) out << ",agent" << a << '_' << d;
  } else {
    put_names(out, "x_", static_cast<Eigen::Index>(sys.n));
  }
  out << '\n';
  for (const auto& s : traj.samples) {
    out << format_number(s.time);
    put_vector(out, s.x);
    out << '\n';
  }
}

void write_inputs_csv(std::ostream& out, const Trajectory& traj) {
  out << "time,mode";
  if (!traj.samples.empty()) put_names(out, "u_", traj.samples.front().u.size());
  out << ",u_inf\n";
  for (const auto& s : traj.samples) {
    out << format_number(s.time) << ',' << s.mode;
    put_vector(out, s.u);
    out << ',' << format_number(s.u.size() ? s.u.lpNorm<Eigen::Infinity>() : 0.0) << '\n';
  }
}

std::string report_json(const RunReport& rep, const std::string& scenario_name,
                        const std::string& formula_text) {
  using nlohmann::json;
  json j;
  j["scenario"] = scenario_name;
  j["formula"] = formula_text;
  j["completed"] = rep.completed;
  j["final_mode"] = rep.final_mode;
  j["end_time"] = rep.end_time;
  j["samples"] = rep.n_samples;
  j["monitor_robustness"] = rep.monitor ? number_or_null(*rep.monitor) : json(nullptr);
  j["r_min"] = number_or_null(rep.r_min);
  j["rho_max_min"] = number_or_null(rep.rho_max_min);
  j["claim_r_min_lt_rho_lt_rho_max_min"] = rep.claim_holds;
  j["min_lower_margin"] = number_or_null(rep.min_lower_margin);
  j["min_upper_margin"] = number_or_null(rep.min_upper_margin);
  j["max_u_inf"] = rep.max_u_inf;
  j["saturation"] = rep.saturation ? json(*rep.saturation) : json(nullptr);
  j["saturation_exceedances"] = rep.saturation_exceedances;
  j["rho_opt"] = rep.rho_opt;
  j["integrator"] = rep.integrator;
  j["step"] = rep.step;
  j["smoothing_k"] = rep.k;
  j["disturbance"] = {{"kind", rep.disturbance_kind},
                      {"bound", rep.disturbance_bound},
                      {"seed", rep.seed},
                      {"generator", rep.generator}};
  json jumps = json::array();
  for (const auto& jr : rep.jumps) {
    jumps.push_back({{"from", jr.from_q},
                     {"to", jr.to_q},
                     {"global_time", jr.global_time},
                     {"local_time", jr.local_time},
                     {"rho", jr.rho},
                     {"x", vector_json(jr.x)},
                     {"window_ok", jr.window_ok}});
  }
  j["jumps"] = std::move(jumps);
  json params = json::array();
  for (const auto& p : rep.params) {
    params.push_back({{"task", p.q},
                      {"selected_at", p.selected_at},
                      {"rho_at_selection", p.rho_at_selection},
                      {"t_star", p.params.t_star},
                      {"deadline_local", p.params.deadline},
                      {"r", p.params.r},
                      {"rho_max", p.params.rho_max},
                      {"gamma0", p.params.perf.gamma0},
                      {"gamma_inf", p.params.perf.gamma_inf},
                      {"l", p.params.perf.l}});
  }
  j["task_params"] = std::move(params);
  j["error"] = rep.error.empty() ? json(nullptr) : json(rep.error);
  return j.dump(2) + "\n";
}

}  // namespace stlppc
