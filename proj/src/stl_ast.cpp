#include "stlppc/stl_ast.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "stlppc/errors.hpp"

namespace stlppc {

// ---------------------------------------------------------------------------
// PredicateAtom

PredicateAtom PredicateAtom::halfspace(std::string name, Eigen::VectorXd normal, double offset,
                                       double scale) {
  PredicateAtom atom;
  atom.name = std::move(name);
  atom.kind = Kind::halfspace;
  atom.normal = std::move(normal);
  atom.offset = offset;
  atom.scale = scale;
  atom.validate();
  return atom;
}

PredicateAtom PredicateAtom::inf_ball(std::string name, std::vector<std::size_t> selector,
                                      Eigen::VectorXd center, double radius, double scale) {
  PredicateAtom atom;
  atom.name = std::move(name);
  atom.kind = Kind::inf_ball;
  atom.selector = std::move(selector);
  atom.center = std::move(center);
  atom.radius = radius;
  atom.scale = scale;
  atom.validate();
  return atom;
}

void PredicateAtom::validate(std::size_t state_dim) const {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw InvalidAtom("'" + name + "': scale must be positive and finite");
  if (kind == Kind::halfspace) {
    if (normal.size() == 0 || normal.isZero(0.0))
      throw InvalidAtom("'" + name + "': halfspace normal must be nonzero");
    if (!normal.allFinite() || !std::isfinite(offset))
      throw InvalidAtom("'" + name + "': halfspace coefficients must be finite");
    if (state_dim != 0 && static_cast<std::size_t>(normal.size()) != state_dim)
      throw InvalidAtom("'" + name + "': normal has dimension " + std::to_string(normal.size()) +
                        ", state has " + std::to_string(state_dim));
    return;
  }
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw InvalidAtom("'" + name + "': inf_ball radius must be positive");
  if (selector.empty()) throw InvalidAtom("'" + name + "': inf_ball selector is empty");
  if (static_cast<std::size_t>(center.size()) != selector.size())
    throw InvalidAtom("'" + name + "': center and selector sizes differ");
  std::set<std::size_t> seen(selector.begin(), selector.end());
  if (seen.size() != selector.size())
    throw InvalidAtom("'" + name + "': selector indices must be distinct");
  if (state_dim != 0 && *seen.rbegin() >= state_dim)
    throw InvalidAtom("'" + name + "': selector index " + std::to_string(*seen.rbegin()) +
                      " outside state dimension " + std::to_string(state_dim));
}

double PredicateAtom::evaluate(const Eigen::VectorXd& x) const {
  if (kind == Kind::halfspace) return scale * (offset - normal.dot(x));
  double worst = kInf;
  for (std::size_t i = 0; i < selector.size(); ++i) {
    const double d = x(static_cast<Eigen::Index>(selector[i])) - center(static_cast<Eigen::Index>(i));
    worst = std::min(worst, radius - std::abs(d));
  }
  return scale * worst;
}

std::vector<PredicateAtom> PredicateAtom::halfspaces(std::size_t state_dim) const {
  if (kind == Kind::halfspace) return {*this};
  std::vector<PredicateAtom> out;
  out.reserve(2 * selector.size());
  for (std::size_t i = 0; i < selector.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(selector[i]);
    const double c = center(static_cast<Eigen::Index>(i));
    // x_i - c_i < radius  and  c_i - x_i < radius
    Eigen::VectorXd up = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_dim));
    up(idx) = 1.0;
    out.push_back(halfspace(name + "[" + std::to_string(selector[i]) + "+]", up, radius + c, scale));
    Eigen::VectorXd down = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_dim));
    down(idx) = -1.0;
    out.push_back(
        halfspace(name + "[" + std::to_string(selector[i]) + "-]", down, radius - c, scale));
  }
  return out;
}

std::shared_ptr<const PredicateAtom> make_box_atom(std::size_t state_dim, double bound) {
  std::vector<std::size_t> all(state_dim);
  for (std::size_t i = 0; i < state_dim; ++i) all[i] = i;
  return std::make_shared<const PredicateAtom>(PredicateAtom::inf_ball(
      "__box", std::move(all), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_dim)),
      bound));
}

// ---------------------------------------------------------------------------
// FormulaNode

FormulaNode FormulaNode::truth() { return FormulaNode{}; }

FormulaNode FormulaNode::predicate(std::shared_ptr<const PredicateAtom> atom) {
  FormulaNode n;
  n.kind = Kind::predicate;
  n.atom = std::move(atom);
  return n;
}

FormulaNode FormulaNode::neg_predicate(std::shared_ptr<const PredicateAtom> atom) {
  FormulaNode n;
  n.kind = Kind::neg_predicate;
  n.atom = std::move(atom);
  return n;
}

FormulaNode FormulaNode::conjunction(std::vector<FormulaNode> children) {
  if (children.empty()) throw FragmentViolation("conjunction needs at least one child");
  for (const auto& c : children)
    if (!c.is_non_temporal())
      throw FragmentViolation("conjunction children must be non-temporal");
  FormulaNode n;
  n.kind = Kind::conjunction;
  n.children = std::move(children);
  return n;
}

namespace {

void check_window(double a, double b) {
  if (!(a >= 0.0) || !(a <= b) || !std::isfinite(a) || std::isnan(b))
    throw FragmentViolation("time window [" + std::to_string(a) + "," + std::to_string(b) +
                            "] must satisfy 0 <= a <= b");
}

FormulaNode temporal(FormulaNode::Kind kind, double a, double b, FormulaNode body) {
  check_window(a, b);
  if (!body.is_non_temporal())
    throw FragmentViolation("atomic temporal formulas take a non-temporal body");
  FormulaNode n;
  n.kind = kind;
  n.window = {a, b};
  n.children.push_back(std::move(body));
  return n;
}

}  // namespace

FormulaNode FormulaNode::always(double a, double b, FormulaNode body) {
  return temporal(Kind::always, a, b, std::move(body));
}

FormulaNode FormulaNode::eventually(double a, double b, FormulaNode body) {
  return temporal(Kind::eventually, a, b, std::move(body));
}

FormulaNode FormulaNode::seq_conj(std::vector<FormulaNode> children) {
  if (children.empty()) throw FragmentViolation("sequence needs at least one formula");
  for (const auto& c : children)
    if (c.kind != Kind::always && c.kind != Kind::eventually)
      throw FragmentViolation("conjunct sequences contain atomic temporal formulas only");
  for (std::size_t i = 0; i + 1 < children.size(); ++i)
    if (children[i].window.bounded() && children[i].window.hi > children[i + 1].window.lo)
      throw WindowOrderViolation("conjunct " + std::to_string(i + 1) + " ends at " +
                                 std::to_string(children[i].window.hi) + " after conjunct " +
                                 std::to_string(i + 2) + " starts at " +
                                 std::to_string(children[i + 1].window.lo));
  FormulaNode n;
  n.kind = Kind::seq_conj;
  n.children = std::move(children);
  return n;
}

FormulaNode FormulaNode::seq_nest(std::vector<Window> steps, std::vector<FormulaNode> bodies,
                                  FormulaNode terminal) {
  if (steps.empty() || steps.size() != bodies.size())
    throw FragmentViolation("nested sequence needs one body per step");
  for (const auto& w : steps) check_window(w.lo, w.hi);
  for (const auto& b : bodies)
    if (!b.is_non_temporal()) throw FragmentViolation("nested step bodies must be non-temporal");
  if (terminal.kind != Kind::always && terminal.kind != Kind::eventually)
    throw FragmentViolation("nested sequence must end in an atomic temporal formula");
  FormulaNode n;
  n.kind = Kind::seq_nest;
  n.step_windows = std::move(steps);
  n.children = std::move(bodies);
  n.children.push_back(std::move(terminal));
  return n;
}

bool FormulaNode::is_temporal() const {
  return kind == Kind::always || kind == Kind::eventually || kind == Kind::seq_conj ||
         kind == Kind::seq_nest;
}

bool FormulaNode::is_non_temporal() const {
  if (is_temporal()) return false;
  return std::all_of(children.begin(), children.end(),
                     [](const FormulaNode& c) { return c.is_non_temporal(); });
}

bool structurally_equal(const FormulaNode& a, const FormulaNode& b) {
  if (a.kind != b.kind) return false;
  if ((a.atom == nullptr) != (b.atom == nullptr)) return false;
  if (a.atom && a.atom->name != b.atom->name) return false;
  if (a.is_temporal() && a.kind != FormulaNode::Kind::seq_conj &&
      a.kind != FormulaNode::Kind::seq_nest && !(a.window == b.window))
    return false;
  if (a.step_windows != b.step_windows) return false;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  return true;
}

double horizon(const FormulaNode& node) {
  using K = FormulaNode::Kind;
  switch (node.kind) {
    case K::truth:
    case K::predicate:
    case K::neg_predicate:
      return 0.0;
    case K::conjunction:
    case K::seq_conj: {
      double h = 0.0;
      for (const auto& c : node.children) h = std::max(h, horizon(c));
      return h;
    }
    case K::always:
    case K::eventually:
      return node.window.hi + horizon(node.children.front());
    case K::seq_nest: {
      // Each step's body is checked at the step's own instant, the tail after it.
      double offset = 0.0;
      double h = 0.0;
      for (std::size_t k = 0; k < node.step_windows.size(); ++k) {
        offset += node.step_windows[k].hi;
        h = std::max(h, offset + horizon(node.children[k]));
      }
      return std::max(h, offset + horizon(node.terminal()));
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Token {
  enum class Type { ident, number, lbracket, rbracket, lparen, rparen, comma, amp, bang, bar, end };
  Type type;
  std::string text;
  double value = 0.0;
  std::size_t pos = 0;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    auto single = [&](Token::Type t) {
      out.push_back({t, std::string(1, c), 0.0, start});
      ++i;
    };
    switch (c) {
      case '[': single(Token::Type::lbracket); continue;
      case ']': single(Token::Type::rbracket); continue;
      case '(': single(Token::Type::lparen); continue;
      case ')': single(Token::Type::rparen); continue;
      case ',': single(Token::Type::comma); continue;
      case '&': single(Token::Type::amp); continue;
      case '!': single(Token::Type::bang); continue;
      case '|': single(Token::Type::bar); continue;
      default: break;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' ||
                              s[i] == '.'))
        ++i;
      std::string word(s.substr(start, i - start));
      if (word == "inf") {
        out.push_back({Token::Type::number, word, kInf, start});
      } else {
        out.push_back({Token::Type::ident, word, 0.0, start});
      }
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-') {
      double v = 0.0;
      const char* first = s.data() + i;
      const char* last = s.data() + s.size();
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{}) throw SyntaxError(start, "a number");
      i = static_cast<std::size_t>(ptr - s.data());
      out.push_back({Token::Type::number, std::string(s.substr(start, i - start)), v, start});
      continue;
    }
    throw SyntaxError(start, "an operator, identifier, or number");
  }
  out.push_back({Token::Type::end, "", 0.0, s.size()});
  return out;
}

class Parser {
public:
  Parser(std::vector<Token> tokens, const AtomTable& atoms)
      : tokens_(std::move(tokens)), atoms_(atoms) {}

  FormulaNode parse() {
    reject_outside_fragment();
    if (!at_temporal()) {
      if (peek().type == Token::Type::ident || peek().type == Token::Type::bang)
        throw FragmentViolation("top-level formula must be a temporal formula (G or F)");
      throw SyntaxError(peek().pos, "'G[' or 'F['");
    }
    std::vector<FormulaNode> conjuncts;
    conjuncts.push_back(parse_temporal());
    while (peek().type == Token::Type::amp) {
      next();
      if (!at_temporal())
        throw FragmentViolation("top-level conjuncts must be temporal formulas");
      conjuncts.push_back(parse_temporal());
    }
    expect(Token::Type::end, "end of formula");
    if (conjuncts.size() == 1) return std::move(conjuncts.front());
    for (const auto& c : conjuncts)
      if (c.kind == FormulaNode::Kind::seq_nest)
        throw FragmentViolation("nested eventually chains cannot be conjoined with other formulas");
    return FormulaNode::seq_conj(std::move(conjuncts));
  }

private:
  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

  const Token& expect(Token::Type type, const std::string& what) {
    if (peek().type != type) throw SyntaxError(peek().pos, what);
    return next();
  }

  bool at_temporal() const {
    return peek().type == Token::Type::ident && (peek().text == "G" || peek().text == "F") &&
           peek(1).type == Token::Type::lbracket;
  }

  void reject_outside_fragment() const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      const auto& t = tokens_[i];
      if (t.type == Token::Type::bar)
        throw FragmentViolation("disjunction at position " + std::to_string(t.pos) +
                                " is outside the supported fragment");
      if (t.type == Token::Type::ident && t.text == "U" && i + 1 < tokens_.size() &&
          tokens_[i + 1].type == Token::Type::lbracket)
        throw FragmentViolation("until operator at position " + std::to_string(t.pos) +
                                " is outside the supported fragment");
    }
  }

  FormulaNode parse_temporal() {
    const Token& op = next();
    const bool is_always = op.text == "G";
    expect(Token::Type::lbracket, "'['");
    const double a = expect(Token::Type::number, "window lower bound").value;
    expect(Token::Type::comma, "','");
    const double b = expect(Token::Type::number, "window upper bound or 'inf'").value;
    expect(Token::Type::rbracket, "']'");
    if (!(a >= 0.0) || !(a <= b) || !std::isfinite(a))
      throw SyntaxError(op.pos, "a window with 0 <= a <= b");
    expect(Token::Type::lparen, "'('");

    std::vector<FormulaNode> lits;
    std::optional<FormulaNode> tail;
    while (true) {
      if (at_temporal()) {
        tail = parse_temporal();
        if (peek().type == Token::Type::amp)
          throw FragmentViolation("a nested temporal formula must be the last conjunct of its body");
        break;
      }
      lits.push_back(parse_literal());
      if (peek().type != Token::Type::amp) break;
      next();
    }
    expect(Token::Type::rparen, "')'");

    FormulaNode psi = lits.empty()        ? FormulaNode::truth()
                      : lits.size() == 1 ? std::move(lits.front())
                                         : FormulaNode::conjunction(std::move(lits));
    if (!tail) {
      return is_always ? FormulaNode::always(a, b, std::move(psi))
                       : FormulaNode::eventually(a, b, std::move(psi));
    }
    if (is_always)
      throw FragmentViolation("only eventually operators may contain a nested temporal formula");
    if (tail->kind == FormulaNode::Kind::seq_nest) {
      std::vector<Window> steps{{a, b}};
      steps.insert(steps.end(), tail->step_windows.begin(), tail->step_windows.end());
      std::vector<FormulaNode> bodies{std::move(psi)};
      FormulaNode terminal = tail->children.back();
      tail->children.pop_back();
      for (auto& c : tail->children) bodies.push_back(std::move(c));
      return FormulaNode::seq_nest(std::move(steps), std::move(bodies), std::move(terminal));
    }
    return FormulaNode::seq_nest({{a, b}}, {std::move(psi)}, std::move(*tail));
  }

  FormulaNode parse_literal() {
    bool negated = false;
    if (peek().type == Token::Type::bang) {
      next();
      negated = true;
      if (peek().type != Token::Type::ident || at_temporal())
        throw FragmentViolation("negation applies to atoms only (position " +
                                std::to_string(peek().pos) + ")");
    }
    const Token& id = expect(Token::Type::ident, "an atom name");
    if (id.text == "true") {
      if (negated) throw FragmentViolation("negation applies to atoms only");
      return FormulaNode::truth();
    }
    auto it = atoms_.find(id.text);
    if (it == atoms_.end()) throw UnknownAtom(id.text);
    if (!negated) return FormulaNode::predicate(it->second);
    if (it->second->kind == PredicateAtom::Kind::inf_ball)
      throw FragmentViolation("negated inf_ball '" + id.text + "' has a non-concave robustness");
    return FormulaNode::neg_predicate(it->second);
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  const AtomTable& atoms_;
};

std::string number_text(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string window_text(const Window& w) {
  return "[" + number_text(w.lo) + "," + number_text(w.hi) + "]";
}

}  // namespace

FormulaNode parse_formula(std::string_view text, const AtomTable& atoms) {
  return Parser(tokenize(text), atoms).parse();
}

std::string to_string(const FormulaNode& node) {
  using K = FormulaNode::Kind;
  switch (node.kind) {
    case K::truth: return "true";
    case K::predicate: return node.atom->name;
    case K::neg_predicate: return "!" + node.atom->name;
    case K::conjunction:
    case K::seq_conj: {
      std::string out;
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        if (i) out += " & ";
        out += to_string(node.children[i]);
      }
      return out;
    }
    case K::always:
      return "G" + window_text(node.window) + "(" + to_string(node.children.front()) + ")";
    case K::eventually:
      return "F" + window_text(node.window) + "(" + to_string(node.children.front()) + ")";
    case K::seq_nest: {
      std::string out = to_string(node.terminal());
      for (std::size_t k = node.step_windows.size(); k-- > 0;)
        out = "F" + window_text(node.step_windows[k]) + "(" + to_string(node.children[k]) +
              " & " + out + ")";
      return out;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Flattening

namespace {

void collect_halfspaces(const FormulaNode& node, std::size_t dim,
                        std::vector<FormulaNode>& out) {
  using K = FormulaNode::Kind;
  switch (node.kind) {
    case K::truth: return;
    case K::predicate:
      for (auto& h : node.atom->halfspaces(dim))
        out.push_back(FormulaNode::predicate(std::make_shared<const PredicateAtom>(std::move(h))));
      return;
    case K::neg_predicate: {
      if (node.atom->kind != PredicateAtom::Kind::halfspace)
        throw FragmentViolation("negated inf_ball '" + node.atom->name + "' is not concave");
      PredicateAtom flipped = *node.atom;
      flipped.name = "!" + flipped.name;
      flipped.normal = -flipped.normal;
      flipped.offset = -flipped.offset;
      out.push_back(FormulaNode::predicate(std::make_shared<const PredicateAtom>(std::move(flipped))));
      return;
    }
    case K::conjunction:
      for (const auto& c : node.children) collect_halfspaces(c, dim, out);
      return;
    default:
      throw FragmentViolation("task bodies must be non-temporal");
  }
}

AtomicTask make_task(std::size_t index, const FormulaNode& atomic, Window window,
                     Window cumulative, const FlattenOptions& options) {
  AtomicTask task;
  task.index = index;
  task.kind = atomic.kind == FormulaNode::Kind::always ? TaskKind::always : TaskKind::eventually;
  task.window = window;
  task.cumulative = cumulative;
  FormulaNode body = atomic.children.front();
  if (options.box_bound) {
    if (options.state_dim == 0)
      throw FragmentViolation("the well-posedness box needs the state dimension");
    body = FormulaNode::conjunction(
        {std::move(body), FormulaNode::predicate(make_box_atom(options.state_dim, *options.box_bound))});
  }
  task.body = desugar_body(body, options.state_dim);
  return task;
}

}  // namespace

FormulaNode desugar_body(const FormulaNode& body, std::size_t state_dim) {
  if (!body.is_non_temporal()) throw FragmentViolation("only non-temporal bodies can be desugared");
  std::size_t dim = state_dim;
  if (dim == 0) {
    // Without a declared dimension, infer it from the atoms.
    std::vector<const FormulaNode*> stack{&body};
    while (!stack.empty()) {
      const FormulaNode* n = stack.back();
      stack.pop_back();
      if (n->atom) {
        if (n->atom->kind == PredicateAtom::Kind::halfspace)
          dim = std::max(dim, static_cast<std::size_t>(n->atom->normal.size()));
        else
          for (auto s : n->atom->selector) dim = std::max(dim, s + 1);
      }
      for (const auto& c : n->children) stack.push_back(&c);
    }
  }
  std::vector<FormulaNode> halfspaces;
  collect_halfspaces(body, dim, halfspaces);
  if (halfspaces.empty()) return FormulaNode::truth();
  if (halfspaces.size() == 1) return std::move(halfspaces.front());
  return FormulaNode::conjunction(std::move(halfspaces));
}

FlattenResult flatten_to_tasks(const FormulaNode& root, const FlattenOptions& options) {
  using K = FormulaNode::Kind;
  FlattenResult result;
  switch (root.kind) {
    case K::always:
    case K::eventually:
      result.kind = {1, 1};
      result.tasks.push_back(make_task(1, root, root.window, root.window, options));
      return result;
    case K::seq_conj: {
      const auto& cs = root.children;
      for (std::size_t i = 0; i + 1 < cs.size(); ++i) {
        if (!cs[i].window.bounded())
          throw UnboundedWindowInSequence("conjunct " + std::to_string(i + 1) +
                                          " has an unbounded window but is not the last task");
        if (cs[i].window.hi > cs[i + 1].window.lo)
          throw WindowOrderViolation("conjunct " + std::to_string(i + 1) + " ends at " +
                                     std::to_string(cs[i].window.hi) + " after conjunct " +
                                     std::to_string(i + 2) + " starts at " +
                                     std::to_string(cs[i + 1].window.lo));
      }
      result.kind = {1, cs.size()};
      for (std::size_t i = 0; i < cs.size(); ++i)
        result.tasks.push_back(make_task(i + 1, cs[i], cs[i].window, cs[i].window, options));
      return result;
    }
    case K::seq_nest: {
      const std::size_t steps = root.step_windows.size();
      result.kind = {0, steps + 1};
      Window cumulative{0.0, 0.0};
      for (std::size_t k = 0; k < steps; ++k) {
        const Window w = root.step_windows[k];
        if (!w.bounded())
          throw UnboundedWindowInSequence("step " + std::to_string(k + 1) +
                                          " of the nested chain has an unbounded window");
        cumulative.lo += w.lo;
        cumulative.hi += w.hi;
        result.tasks.push_back(make_task(k + 1, FormulaNode::eventually(w.lo, w.hi, root.children[k]),
                                         w, cumulative, options));
      }
      const FormulaNode& terminal = root.terminal();
      cumulative.lo += terminal.window.lo;
      cumulative.hi += terminal.window.hi;
      result.tasks.push_back(make_task(steps + 1, terminal, terminal.window, cumulative, options));
      return result;
    }
    default:
      throw FragmentViolation("only temporal formulas can be flattened into tasks");
  }
}

}  // namespace stlppc
