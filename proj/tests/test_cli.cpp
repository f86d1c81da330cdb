#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "support.hpp"

#include "stlppc/cli.hpp"
#include "stlppc/errors.hpp"
#include "stlppc/io.hpp"
#include "stlppc/scenario.hpp"

using namespace stlppc;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

const std::string kSource = STLPPC_SOURCE_DIR;

std::string scenario(const std::string& name) { return kSource + "/scenarios/" + name + ".ini"; }

fs::path scratch(const std::string& leaf) {
  const fs::path dir = fs::temp_directory_path() / "stlppc_test_cli" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

template <class E>
std::string thrown_key(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const E& e) {
    return e.key();
  }
  return "<none>";
}

const char* kMinimal = R"(
formula = F[0,1](g)
x0 = 0
[system]
kind = single_integrator
[atom g]
kind = inf_ball
selector = 1
center = 0.5
radius = 0.2
)";

}  // namespace

TEST_CASE("the three-agent scenario loads with its goals") {
  const Scenario sc = load_scenario(scenario("paper_sec6"));
  CHECK(sc.name == "paper_sec6");
  CHECK(sc.step == 0.01);
  CHECK(sc.smooth.k == 20.0);
  CHECK(sc.disturbance.bound == 0.05);
  CHECK(sc.disturbance.kind == DisturbanceKind::uniform);
  CHECK(sc.flat.tasks.size() == 4);
  CHECK(sc.flat.kind.p == 0);
  CHECK(sc.x0 == vec({1.1, 3.1, 2, 0.5, 7, 1.5}));
  const auto& a = sc.atoms.at("atA");
  CHECK(a->selector == std::vector<std::size_t>{0, 1});
  CHECK(a->center == vec({6, 4}));
  CHECK(a->radius == 0.1);
  CHECK(sc.atoms.at("atB")->center == vec({1.2, 9}));
  CHECK(sc.atoms.at("atC")->center == vec({1.2, 7}));
  CHECK(sc.atoms.at("atD")->center == vec({1.2, 5}));
  CHECK(sc.atoms.at("atE")->center == vec({8, 7}));
  CHECK(sc.tasks[3].rho_max == 2.0);
  for (const auto& t : sc.tasks) CHECK(t.r == 0.05);
  CHECK(sc.flat.tasks[0].window.lo == 7.0);
  CHECK(sc.flat.tasks[3].kind == TaskKind::always);
}

TEST_CASE("scenario validation names the offending key") {
  std::string no_formula = kMinimal;
  no_formula.replace(no_formula.find("formula"), 19, "");
  CHECK(thrown_key<ValidationError>(no_formula) == "formula");

  const std::string coarse = std::string(kMinimal) + "[simulation]\nstep = 0.3\n";
  CHECK(thrown_key<ValidationError>(coarse) == "step");

  const std::string bad_seed = std::string(kMinimal) + "[simulation]\nseed = -4\n";
  CHECK_THROWS_AS(parse_scenario(bad_seed), Error);

  CHECK_NOTHROW(parse_scenario(kMinimal));
}

TEST_CASE("malformed lines are parse errors") {
  CHECK_THROWS_AS(parse_scenario("formula F[0,1](g)\n"), ParseError);
  CHECK_THROWS_AS(parse_scenario(std::string(kMinimal) + "[atom g]\nradius = abc\n"), Error);
}

TEST_CASE("trajectory CSV round-trip reproduces the monitor verdict exactly") {
  const Scenario sc = load_scenario(scenario("single_task"));
  const RunResult res = run(make_simulation(sc));
  REQUIRE(res.report.monitor.has_value());
  std::stringstream csv;
  write_trajectory_csv(csv, res.trajectory);
  const SampledSignal sig = read_trajectory_csv(csv);
  REQUIRE(sig.times.size() == res.trajectory.samples.size());
  for (std::size_t i = 0; i < sig.times.size(); ++i) {
    CHECK(sig.times[i] == res.trajectory.samples[i].time);
    CHECK(sig.states[i] == res.trajectory.samples[i].x);
  }
  CHECK(exact_robustness(sc.formula, sig, 0.0) == *res.report.monitor);
}

TEST_CASE("monitor on a constant trace") {
  const fs::path dir = scratch("constant");
  write_text(dir / "trace.csv", "time,x_1\n0,0.7\n0.3,0.7\n0.6,0.7\n0.9,0.7\n");
  write_text(dir / "f.stl",
             "formula = G[0,0.9](below)\n[atom below]\nkind = halfspace\nnormal = 1\noffset = 1\n");
  const auto r = cli({"monitor", (dir / "trace.csv").string(), "--formula", (dir / "f.stl").string()});
  CHECK(r.code == kExitSatisfied);
  CHECK(r.out == "0.30000000000000004\n");

  write_text(dir / "g.stl",
             "formula = G[0,0.9](below)\n[atom below]\nkind = halfspace\nnormal = 1\noffset = 0.5\n");
  const auto s = cli({"monitor", (dir / "trace.csv").string(), "--formula", (dir / "g.stl").string()});
  CHECK(s.code == kExitNotSatisfied);
  CHECK(s.out == "-0.19999999999999996\n");
}

TEST_CASE("monitor example from the scenarios folder") {
  const auto r = cli({"monitor", kSource + "/scenarios/monitor/ramp.csv", "--formula",
                      kSource + "/scenarios/monitor/reach_then_hold.stl"});
  CHECK(r.code == kExitSatisfied);
  CHECK(std::stod(r.out) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("monitor with a window past the end of the trace fails") {
  const fs::path dir = scratch("short");
  write_text(dir / "trace.csv", "time,x_1\n0,0\n1,0\n");
  write_text(dir / "f.stl",
             "formula = F[0,5](g)\n[atom g]\nkind = halfspace\nnormal = 1\noffset = 1\n");
  const auto r = cli({"monitor", (dir / "trace.csv").string(), "--formula", (dir / "f.stl").string()});
  CHECK(r.code == kExitError);
  CHECK(r.err.find("InsufficientHorizon") != std::string::npos);
}

TEST_CASE("run writes outputs and exits 0 on a satisfied task") {
  const fs::path dir = scratch("single");
  const auto r = cli({"run", scenario("single_task"), "--out", dir.string()});
  CHECK(r.code == kExitSatisfied);
  CHECK(r.out.find("1 jumps") != std::string::npos);
  for (const char* f : {"trajectory.csv", "funnel.csv", "paths.csv", "inputs.csv", "report.json"})
    CHECK(fs::exists(dir / f));
  CHECK(read_text(dir / "report.json").find("\"completed\": true") != std::string::npos);

  // the written trajectory monitors to the same value the run printed
  const auto m = cli({"monitor", (dir / "trajectory.csv").string(), "--formula",
                      scenario("single_task")});
  CHECK(m.code == kExitSatisfied);
  CHECK(r.out.find("robustness = " + m.out.substr(0, m.out.size() - 1)) != std::string::npos);
}

TEST_CASE("seed override changes the disturbance, not the verdict") {
  const fs::path a = scratch("seed_a"), b = scratch("seed_b");
  CHECK(cli({"run", scenario("single_task"), "--out", a.string(), "--seed", "1"}).code == 0);
  CHECK(cli({"run", scenario("single_task"), "--out", b.string(), "--seed", "2"}).code == 0);
  CHECK(read_text(a / "trajectory.csv") != read_text(b / "trajectory.csv"));
}

TEST_CASE("infeasible scenario exits 2 and names the task") {
  const fs::path dir = scratch("infeasible");
  const auto r = cli({"run", scenario("infeasible_always"), "--out", dir.string()});
  CHECK(r.code == kExitError);
  CHECK(r.err.find("InfeasibleTask") != std::string::npos);
  CHECK(r.err.find("task 1") != std::string::npos);

  const auto c = cli({"check", scenario("infeasible_always")});
  CHECK(c.code == kExitError);
  CHECK(c.err.find("InfeasibleTask") != std::string::npos);
}

TEST_CASE("check reports a feasible scenario") {
  const auto c = cli({"check", scenario("sequence_two")});
  CHECK(c.code == kExitSatisfied);
  CHECK(c.out.find("task 1 feasible") != std::string::npos);
}

TEST_CASE("bare scenario names resolve under scenarios/") {
  const fs::path here = fs::current_path();
  fs::current_path(kSource);
  const auto c = cli({"check", "single_task"});
  fs::current_path(here);
  CHECK(c.code == kExitSatisfied);
}

TEST_CASE("usage errors exit 2") {
  CHECK(cli({}).code == kExitError);
  CHECK(cli({"frobnicate"}).code == kExitError);
  CHECK(cli({"monitor", "trace.csv"}).code == kExitError);
  const auto missing = cli({"run", "/nonexistent/scenario.ini"});
  CHECK(missing.code == kExitError);
  CHECK(missing.err.rfind("error: ", 0) == 0);
  CHECK(cli({"--help"}).code == kExitSatisfied);
}
