#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "arraymc/term.hpp"

namespace arraymc {

/// Quantifier-free formula over literals (and/or/not tree, no ite).
class Formula {
 public:
  enum class Kind { True, False, Lit, Not, And, Or };

  Formula() : Formula(mk_true()) {}

  static Formula mk_true();
  static Formula mk_false();
  static Formula lit(Literal l);
  static Formula lit(Atom a, bool pos = true) { return lit(Literal{std::move(a), pos}); }
  static Formula mk_not(Formula f);
  static Formula mk_and(std::vector<Formula> fs);
  static Formula mk_or(std::vector<Formula> fs);
  static Formula conj(const std::vector<Literal>& ls);

  Kind kind() const;
  const Literal& literal() const;
  const std::vector<Formula>& kids() const;

  Formula substitute(const std::map<std::string, Term>& m) const;
  bool contains_case_app() const;
  void collect_vars(std::vector<Term>& out) const;
  void collect_reads(std::vector<Term>& out) const;
  std::string str() const;
  int compare(const Formula& o) const;
  bool operator==(const Formula& o) const { return compare(o) == 0; }

 private:
  struct Node;
  std::shared_ptr<const Node> node_;
  explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
};

/// ∃-quantified index shell over a quantifier-free matrix.
struct ExistsI {
  std::vector<Term> vars;  // index variables
  Formula matrix;
  std::string str() const;
};

/// ∀-quantified index shell (initial formulas).
struct ForallI {
  std::vector<Term> vars;
  Formula matrix;
  std::string str() const;
};

/// Primitive (conjunction of literals) ∃^I-formula; differentiated cubes
/// additionally carry every pairwise disequation over their variables.
struct Cube {
  std::vector<Term> vars;
  std::vector<Literal> lits;

  Formula matrix() const { return Formula::conj(lits); }
  ExistsI as_exists() const { return ExistsI{vars, matrix()}; }
  /// Stable renaming for duplicate detection; not a perfect graph canonizer,
  /// missed isomorphs are caught later by the fix-point test.
  Cube canonical() const;
  std::string key() const;
  std::string str() const;
  bool differentiated() const;
};

/// Case-defined global update for one array: ordered if/elif branches with an
/// optional final else. Guards and values mention the transition's index
/// variables, the universal index parameter, and array reads at both.
struct CaseFunction {
  std::string array;                  // updated array
  std::vector<Term> exist_params;     // transition-quantified index variables
  Term univ_param;                    // the single universally-bound index
  struct Branch {
    Formula guard;
    Term value;
  };
  std::vector<Branch> branches;       // ordered, raw (if/elif) guards
  std::optional<Term> else_value;

  /// Exclusive partition guard of branch k (raw guard minus earlier ones),
  /// or the else guard when k == branches.size().
  Formula partition_guard(size_t k) const;
  Term branch_value(size_t k) const;
  size_t case_count() const { return branches.size() + (else_value ? 1 : 0); }
};

/// Guarded-assignment transition in functional form: existentially quantified
/// index variables, a quantifier-free guard over them, and one case-defined
/// update per array (arrays without an entry are updated identically).
struct TransitionRule {
  std::string name;
  std::vector<Term> vars;
  Formula guard;
  std::map<std::string, std::shared_ptr<const CaseFunction>> updates;
};

// --- operations -------------------------------------------------------------

/// Replace every atom containing a case-function application by the disjunction
/// over the partition branches, innermost occurrences first, until none remain.
Formula eliminate_case_functions(const Formula& f);

/// Capture-free simultaneous substitution (sort mismatches throw).
Formula substitute(const Formula& f, const std::map<std::string, Term>& m);

/// NNF + DNF of the negation of f; each entry is one conjunction.
std::vector<std::vector<Literal>> negate_to_dnf(const Formula& f);

/// NNF + DNF of f itself.
std::vector<std::vector<Literal>> to_dnf(const Formula& f);

using CubeSatFn = std::function<bool(const Cube&)>;

/// Rewrite an ∃^I-formula into an equivalent disjunction of primitive
/// differentiated cubes. Splits eagerly on every undetermined pair of index
/// variables (and occurring index constants), merging equated variables.
/// Cubes are dropped only when `is_sat` (an SMT-backed callback) refutes them.
std::vector<Cube> to_primitive_differentiated(const ExistsI& f,
                                              const CubeSatFn& is_sat = nullptr);

std::vector<Term> free_index_vars(const Formula& f);
Term fresh_index_var(const std::string& stem);

}  // namespace arraymc
