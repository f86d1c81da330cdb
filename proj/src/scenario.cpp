#include "stlppc/scenario.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "stlppc/errors.hpp"

namespace stlppc {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Parsed INI tree plus the source line of every key, for diagnostics.
class Document {
public:
  explicit Document(std::string_view text) {
    std::string section;
    std::size_t line_no = 0;
    std::istringstream lines{std::string(text)};
    for (std::string line; std::getline(lines, line);) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == ';' || t[0] == '#') continue;
      if (t.front() == '[') {
        section = trim(std::string_view(t).substr(1, t.find(']') - 1));
        section_lines_.emplace(section, line_no);
        continue;
      }
      const auto eq = t.find('=');
      if (eq != std::string::npos) lines_[{section, trim(std::string_view(t).substr(0, eq))}] = line_no;
    }
    std::istringstream in{std::string(text)};
    try {
      pt::read_ini(in, tree_);
    } catch (const pt::ini_parser_error& e) {
      throw ParseError(e.line(), "", e.message());
    }
  }

  const pt::ptree& root() const { return tree_; }

  std::size_t line(const std::string& section, const std::string& key) const {
    auto it = lines_.find({section, key});
    if (it != lines_.end()) return it->second;
    auto s = section_lines_.find(section);
    return s == section_lines_.end() ? 0 : s->second;
  }

private:
  pt::ptree tree_;
  std::map<std::pair<std::string, std::string>, std::size_t> lines_;
  std::map<std::string, std::size_t> section_lines_;
};

// One INI section (or the root) with typed accessors.
class Section {
public:
  Section(const Document& doc, std::string name, const pt::ptree& node)
      : doc_(doc), name_(std::move(name)), node_(node) {}

  const std::string& name() const { return name_; }

  std::string key_path(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [key, child] : node_) {
      if (!child.empty()) continue;  // sections are handled by the caller
      if (!ok.count(key)) throw ValidationError(key_path(key), "unknown key");
    }
  }

  std::optional<std::string> text(const std::string& key) const {
    auto it = node_.find(key);
    if (it == node_.not_found() || !it->second.empty()) return std::nullopt;
    return trim(it->second.data());
  }

  std::string required_text(const std::string& key) const {
    auto v = text(key);
    if (!v || v->empty()) throw ValidationError(key_path(key), "required");
    return *v;
  }

  std::optional<double> number(const std::string& key) const {
    auto v = text(key);
    if (!v) return std::nullopt;
    return to_number(*v, key);
  }

  double number_or(const std::string& key, double fallback) const {
    return number(key).value_or(fallback);
  }

  double required_number(const std::string& key) const {
    auto v = number(key);
    if (!v) throw ValidationError(key_path(key), "required");
    return *v;
  }

  std::optional<Eigen::VectorXd> vector(const std::string& key) const {
    auto v = text(key);
    if (!v) return std::nullopt;
    std::vector<double> values;
    std::string item;
    std::istringstream in(*v);
    while (in >> item) {
      std::size_t start = 0;
      while (start <= item.size()) {
        const auto comma = item.find(',', start);
        const std::string piece = item.substr(start, comma - start);
        if (!piece.empty()) values.push_back(to_number(piece, key));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    if (values.empty()) throw ParseError(line(key), key_path(key), "expected a list of numbers");
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }

  Eigen::VectorXd required_vector(const std::string& key) const {
    auto v = vector(key);
    if (!v) throw ValidationError(key_path(key), "required");
    return *v;
  }

  Eigen::MatrixXd matrix(const std::string& key) const {
    const std::string raw = required_text(key);
    std::vector<Eigen::VectorXd> rows;
    std::size_t start = 0;
    while (start <= raw.size()) {
      const auto semi = raw.find(';', start);
      const std::string row = trim(std::string_view(raw).substr(start, semi - start));
      if (!row.empty()) rows.push_back(parse_row(row, key));
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    if (rows.empty()) throw ParseError(line(key), key_path(key), "expected matrix rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols())
        throw ParseError(line(key), key_path(key), "rows have different lengths");
      m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return m;
  }

  std::size_t line(const std::string& key) const { return doc_.line(name_, key); }

private:
  double to_number(const std::string& s, const std::string& key) const {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
      throw ParseError(line(key), key_path(key), "expected a number, got '" + s + "'");
    return v;
  }

  Eigen::VectorXd parse_row(const std::string& row, const std::string& key) const {
    std::vector<double> values;
    std::istringstream in(row);
    for (std::string item; in >> item;) {
      std::size_t start = 0;
      while (start <= item.size()) {
        const auto comma = item.find(',', start);
        const std::string piece = item.substr(start, comma - start);
        if (!piece.empty()) values.push_back(to_number(piece, key));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  }

  const Document& doc_;
  std::string name_;
  const pt::ptree& node_;
};

std::optional<Section> section(const Document& doc, const std::string& name) {
  auto it = doc.root().find(name);
  if (it == doc.root().not_found() || it->second.empty()) return std::nullopt;
  return Section(doc, name, it->second);
}

std::size_t count_value(const Section& s, const std::string& key, double v) {
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15)
    throw ValidationError(s.key_path(key), "must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

AtomTable parse_atoms(const Document& doc, std::size_t dim) {
  AtomTable atoms;
  for (const auto& [name, node] : doc.root()) {
    if (node.empty() || name.rfind("atom ", 0) != 0) continue;
    const std::string atom_name = trim(std::string_view(name).substr(5));
    const Section s(doc, name, node);
    s.allow_only({"kind", "normal", "offset", "selector", "center", "radius", "scale"});
    const std::string kind = s.required_text("kind");
    const double scale = s.number_or("scale", 1.0);
    PredicateAtom atom;
    try {
      if (kind == "halfspace") {
        atom = PredicateAtom::halfspace(atom_name, s.required_vector("normal"),
                                        s.required_number("offset"), scale);
      } else if (kind == "inf_ball") {
        const Eigen::VectorXd raw = s.required_vector("selector");
        std::vector<std::size_t> selector;
        for (double v : raw) {
          if (!(v >= 1.0) || v != std::floor(v))
            throw ValidationError(s.key_path("selector"), "indices are 1-based integers");
          selector.push_back(static_cast<std::size_t>(v) - 1);
        }
        atom = PredicateAtom::inf_ball(atom_name, std::move(selector), s.required_vector("center"),
                                       s.required_number("radius"), scale);
      } else {
        throw ValidationError(s.key_path("kind"), "must be halfspace or inf_ball");
      }
      if (dim) atom.validate(dim);
    } catch (const InvalidAtom& e) {
      throw ValidationError(name, e.what());
    }
    atoms.emplace(atom_name, std::make_shared<const PredicateAtom>(std::move(atom)));
  }
  return atoms;
}

SystemModel parse_system(const Document& doc, std::size_t x0_dim) {
  auto s = section(doc, "system");
  std::string kind = "consensus";
  if (s) {
    s->allow_only({"kind", "laplacian", "dims_per_agent", "dimension"});
    kind = s->text("kind").value_or(kind);
  }
  if (kind == "consensus") {
    if (!s) throw ValidationError("system.laplacian", "required");
    const Eigen::MatrixXd lap = s->matrix("laplacian");
    const std::size_t d = count_value(*s, "dims_per_agent", s->number_or("dims_per_agent", 2.0));
    return build_consensus_system(lap, d);
  }
  if (kind == "single_integrator") {
    const double dim = s->number_or("dimension", static_cast<double>(x0_dim));
    return build_single_integrator(count_value(*s, "dimension", dim));
  }
  throw ValidationError("system.kind", "must be consensus or single_integrator");
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& default_name) {
  const Document doc(text);
  const Section top(doc, "", doc.root());
  top.allow_only({"name", "formula", "x0"});
  static const std::set<std::string> known = {"system", "simulation", "disturbance", "policy",
                                              "output"};
  for (const auto& [key, node] : doc.root()) {
    if (node.empty()) continue;
    if (!known.count(key) && key.rfind("atom ", 0) != 0 && key.rfind("task ", 0) != 0)
      throw ValidationError(key, "unknown section");
  }

  Scenario sc;
  sc.name = top.text("name").value_or(default_name);
  sc.formula_text = top.required_text("formula");
  sc.x0 = top.required_vector("x0");
  sc.system = parse_system(doc, static_cast<std::size_t>(sc.x0.size()));
  if (static_cast<std::size_t>(sc.x0.size()) != sc.system.n)
    throw ValidationError("x0", "has " + std::to_string(sc.x0.size()) + " entries, system has " +
                                    std::to_string(sc.system.n) + " states");

  if (auto s = section(doc, "simulation")) {
    s->allow_only({"step", "seed", "smoothing_k", "box_bound", "duration", "saturation"});
    sc.step = s->number_or("step", sc.step);
    sc.smooth.k = s->number_or("smoothing_k", sc.smooth.k);
    if (auto box = s->text("box_bound"); box && *box == "none") sc.box_bound.reset();
    else if (box) sc.box_bound = s->number("box_bound");
    sc.duration = s->number("duration");
    sc.saturation = s->number("saturation");
    if (auto seed = s->number("seed")) sc.disturbance.seed = count_value(*s, "seed", *seed);
  }
  if (!(sc.step > 0.0 && std::isfinite(sc.step)))
    throw ValidationError("simulation.step", "must be positive");
  if (!(sc.smooth.k > 0.0 && std::isfinite(sc.smooth.k)))
    throw ValidationError("simulation.smoothing_k", "must be positive");
  if (sc.box_bound && !(*sc.box_bound > 0.0))
    throw ValidationError("simulation.box_bound", "must be positive or none");
  if (sc.duration && !(*sc.duration > 0.0))
    throw ValidationError("simulation.duration", "must be positive");
  if (sc.saturation && !(*sc.saturation > 0.0))
    throw ValidationError("simulation.saturation", "must be positive");

  if (auto s = section(doc, "disturbance")) {
    s->allow_only({"kind", "bound"});
    const std::string kind = s->text("kind").value_or("zero");
    if (kind == "zero") sc.disturbance.kind = DisturbanceKind::zero;
    else if (kind == "uniform") sc.disturbance.kind = DisturbanceKind::uniform;
    else if (kind == "sinusoidal") sc.disturbance.kind = DisturbanceKind::sinusoidal;
    else throw ValidationError("disturbance.kind", "must be zero, uniform or sinusoidal");
    sc.disturbance.bound = s->number_or("bound", 0.0);
    if (!(sc.disturbance.bound >= 0.0 && std::isfinite(sc.disturbance.bound)))
      throw ValidationError("disturbance.bound", "must be nonnegative");
  }

  if (auto s = section(doc, "policy")) {
    s->allow_only({"eta", "gamma0_margin", "gamma_inf_fraction", "l_free", "unbounded_horizon"});
    sc.policy.eta = s->number_or("eta", sc.policy.eta);
    sc.policy.gamma0_margin = s->number_or("gamma0_margin", sc.policy.gamma0_margin);
    sc.policy.gamma_inf_fraction = s->number_or("gamma_inf_fraction", sc.policy.gamma_inf_fraction);
    sc.policy.l_free = s->number_or("l_free", sc.policy.l_free);
    sc.policy.unbounded_horizon = s->number_or("unbounded_horizon", sc.policy.unbounded_horizon);
    try {
      sc.policy.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("policy." + e.key(), e.reason());
    }
  }

  sc.atoms = parse_atoms(doc, sc.system.n);
  sc.formula = parse_formula(sc.formula_text, sc.atoms);
  FlattenOptions fo;
  fo.state_dim = sc.system.n;
  fo.box_bound = sc.box_bound;
  sc.flat = flatten_to_tasks(sc.formula, fo);

  const std::size_t n_tasks = sc.flat.tasks.size();
  sc.tasks.assign(n_tasks, TaskSettings{});
  for (const auto& [name, node] : doc.root()) {
    if (node.empty() || name.rfind("task ", 0) != 0) continue;
    const std::string idx = trim(std::string_view(name).substr(5));
    std::size_t q = 0;
    auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), q);
    if (ec != std::errc() || ptr != idx.data() + idx.size() || q == 0)
      throw ParseError(doc.line(name, ""), name, "task index must be a positive integer");
    if (q > n_tasks)
      throw ValidationError(name, "index beyond the " + std::to_string(n_tasks) + " tasks");
    const Section s(doc, name, node);
    s.allow_only({"r", "rho_max", "t_star"});
    TaskSettings& ts = sc.tasks[q - 1];
    ts.r = s.number_or("r", 0.0);
    if (!(ts.r >= 0.0 && std::isfinite(ts.r))) throw ValidationError(s.key_path("r"), "must be >= 0");
    ts.rho_max = s.number("rho_max");
    ts.t_star = s.number("t_star");
    if (ts.t_star && sc.flat.tasks[q - 1].kind == TaskKind::always)
      throw ValidationError(s.key_path("t_star"), "is fixed by the window for always-tasks");
    if (ts.t_star) {
      const Window& w = sc.flat.tasks[q - 1].window;
      if (!(*ts.t_star >= w.lo && *ts.t_star <= w.hi))
        throw ValidationError(s.key_path("t_star"), "must lie inside the task window");
    }
  }

  TaskPlan shape;
  shape.kind = sc.flat.kind;
  shape.tasks = sc.flat.tasks;
  shape.settings = sc.tasks;
  shape.policy = sc.policy;
  validate_step(shape, sc.step);
  if (!std::isfinite(horizon(sc.formula)) && !sc.duration)
    throw ValidationError("simulation.duration", "required when the formula horizon is unbounded");

  sc.output_dir = std::filesystem::path("out") / sc.name;
  if (auto s = section(doc, "output")) {
    s->allow_only({"directory"});
    if (auto dir = s->text("directory")) sc.output_dir = *dir;
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario", "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.stem().string());
}

std::filesystem::path resolve_scenario(const std::string& arg) {
  std::filesystem::path p(arg);
  if (std::filesystem::exists(p)) return p;
  if (!p.has_extension() && p.parent_path().empty()) {
    auto candidate = std::filesystem::path("scenarios") / (arg + ".ini");
    if (std::filesystem::exists(candidate)) return candidate;
  }
  return p;
}

Simulation make_simulation(const Scenario& sc, const OptimumOptions& options) {
  Simulation sim;
  sim.system = sc.system;
  sim.plan = make_plan(sc.flat, sc.tasks, sc.smooth, sc.policy, sc.x0, options);
  sim.formula = sc.formula;
  sim.x0 = sc.x0;
  sim.step = sc.step;
  sim.duration = sc.duration;
  sim.disturbance = sc.disturbance;
  sim.saturation = sc.saturation;
  return sim;
}

FormulaFile parse_formula_file(std::string_view text, std::size_t dim) {
  const Document doc(text);
  const Section top(doc, "", doc.root());
  FormulaFile out;
  out.text = top.required_text("formula");
  out.t0 = top.number_or("t0", 0.0);
  out.atoms = parse_atoms(doc, dim);
  out.formula = parse_formula(out.text, out.atoms);
  return out;
}

FormulaFile load_formula_file(const std::filesystem::path& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw ValidationError("formula", "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_formula_file(buf.str(), dim);
}

}  // namespace stlppc
