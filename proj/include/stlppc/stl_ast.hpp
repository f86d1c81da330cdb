#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace stlppc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A named predicate mu whose robustness is h(x). Halfspaces give
/// h(x) = scale * (offset - normal . x); an inf-ball ||x_sel - center||_inf < radius
/// is the conjunction of 2*|sel| such halfspaces.
struct PredicateAtom {
  enum class Kind { halfspace, inf_ball };

  std::string name;
  Kind kind = Kind::halfspace;
  Eigen::VectorXd normal;           // halfspace only, full state dimension
  double offset = 0.0;              // halfspace only
  std::vector<std::size_t> selector;  // inf_ball only
  Eigen::VectorXd center;           // inf_ball only, one entry per selector index
  double radius = 0.0;              // inf_ball only
  double scale = 1.0;

  static PredicateAtom halfspace(std::string name, Eigen::VectorXd normal, double offset,
                                 double scale = 1.0);
  static PredicateAtom inf_ball(std::string name, std::vector<std::size_t> selector,
                                Eigen::VectorXd center, double radius, double scale = 1.0);

  /// Throws InvalidAtom when an invariant fails. `state_dim` of 0 skips the
  /// dimension checks.
  void validate(std::size_t state_dim = 0) const;

  /// Exact predicate value; for an inf-ball the min over its halfspaces.
  double evaluate(const Eigen::VectorXd& x) const;

  /// The halfspaces this atom stands for (itself, for a halfspace).
  std::vector<PredicateAtom> halfspaces(std::size_t state_dim) const;
};

using AtomTable = std::map<std::string, std::shared_ptr<const PredicateAtom>, std::less<>>;

struct Window {
  double lo = 0.0;
  double hi = 0.0;
  bool bounded() const { return hi < kInf; }
  friend bool operator==(const Window&, const Window&) = default;
};

/// AST of the supported STL fragment.
///
///   True, Predicate, NegPredicate, And      non-temporal bodies (psi)
///   Always, Eventually                      one window + one psi child
///   SeqConj                                 time-ordered conjunction of atomic formulas
///   SeqNest                                 F[c1,d1](psi1 & F[c2,d2](psi2 & ... & phi_N));
///                                           children = psi_1..psi_{N-1}, terminal phi_N;
///                                           step_windows = (c_k, d_k) for k < N
struct FormulaNode {
  enum class Kind { truth, predicate, neg_predicate, conjunction, always, eventually,
                    seq_conj, seq_nest };

  Kind kind = Kind::truth;
  std::shared_ptr<const PredicateAtom> atom;
  Window window;
  std::vector<FormulaNode> children;
  std::vector<Window> step_windows;

  static FormulaNode truth();
  static FormulaNode predicate(std::shared_ptr<const PredicateAtom> atom);
  static FormulaNode neg_predicate(std::shared_ptr<const PredicateAtom> atom);
  static FormulaNode conjunction(std::vector<FormulaNode> children);
  static FormulaNode always(double a, double b, FormulaNode body);
  static FormulaNode eventually(double a, double b, FormulaNode body);
  static FormulaNode seq_conj(std::vector<FormulaNode> children);
  static FormulaNode seq_nest(std::vector<Window> steps, std::vector<FormulaNode> bodies,
                              FormulaNode terminal);

  bool is_temporal() const;
  /// True when no temporal operator occurs anywhere below this node.
  bool is_non_temporal() const;

  const FormulaNode& terminal() const { return children.back(); }
};

bool structurally_equal(const FormulaNode& a, const FormulaNode& b);

/// Parses the concrete syntax
///   formula := temporal ("&" temporal)*
///   temporal := ("G"|"F") "[" num "," (num|"inf") "]" "(" body ")"
///   body := lit ("&" lit)* ["&" temporal] | temporal
///   lit := ["!"] ident | "true"
FormulaNode parse_formula(std::string_view text, const AtomTable& atoms);

/// Inverse of parse_formula up to whitespace.
std::string to_string(const FormulaNode& node);

/// Latest time (relative to evaluation time) the formula looks at.
double horizon(const FormulaNode& node);

enum class TaskKind { eventually = 0, always = 1 };

struct AtomicTask {
  std::size_t index = 1;  // q, 1-based
  TaskKind kind = TaskKind::eventually;
  Window window;             // (a_q, b_q) for p=1, raw step (c_q, d_q) for p=0
  FormulaNode body;          // non-temporal, halfspaces and one flat conjunction
  Window cumulative;         // prefix sums for p=0, equal to window for p=1
};

/// p = 1 for time-ordered conjunctions (and single atomic formulas), 0 for
/// nested eventually chains.
struct SequenceKind {
  int p = 1;
  std::size_t n_tasks = 1;
};

struct FlattenOptions {
  std::size_t state_dim = 0;
  /// When set, ||x||_inf < box_bound is conjoined to every task body
  /// (requires state_dim > 0).
  std::optional<double> box_bound;
};

struct FlattenResult {
  SequenceKind kind;
  std::vector<AtomicTask> tasks;
};

FlattenResult flatten_to_tasks(const FormulaNode& root, const FlattenOptions& options = {});

/// Rewrites a non-temporal body into a single n-ary conjunction of halfspace
/// predicates (or one predicate). Negated halfspaces become halfspaces with
/// flipped sign.
FormulaNode desugar_body(const FormulaNode& body, std::size_t state_dim);

/// Atom for ||x||_inf < bound over all coordinates.
std::shared_ptr<const PredicateAtom> make_box_atom(std::size_t state_dim, double bound);

}  // namespace stlppc
