#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arraymc/formula.hpp"
#include "arraymc/term.hpp"

namespace arraymc {

/// Value of an element sort in a finite model: an enumerated member (by name)
/// or an exact rational.
struct ElemValue {
  bool rational = false;
  std::string sym;
  Rational rat;

  static ElemValue of_sym(std::string s) { return ElemValue{false, std::move(s), Rational()}; }
  static ElemValue of_rat(Rational r) { return ElemValue{true, "", r}; }
  bool operator==(const ElemValue& o) const {
    if (rational != o.rational) return false;
    return rational ? rat == o.rat : sym == o.sym;
  }
  bool operator<(const ElemValue& o) const {
    if (rational != o.rational) return rational < o.rational;
    return rational ? rat < o.rat : sym < o.sym;
  }
  std::string str() const { return rational ? rat.str() : sym; }
};

/// Finite index model produced by the conjunction solver: a partition of the
/// input terms plus the relation structure on the classes.
struct IndexModel {
  std::vector<Term> terms;
  std::vector<int> cls;            // terms[i] lives in class cls[i]
  int n_classes = 0;
  std::vector<int> rank;           // linear order: position of each class
  std::vector<int> succ;           // successor: succ[c] = class or -1
  int cls_of(const Term& t) const;
};

/// Locally finite, substructure-closed index theories. The relational kinds
/// (equality, linear order, plain successor graph) have no constants; the
/// origin variant of the successor graph carries the two constants o, o1 with
/// S(o, o1) and no predecessor of o, making it quasi-relational.
class IndexTheory {
 public:
  enum class Kind { PureEquality, LinearOrder, SuccessorGraph };

  IndexTheory(Kind k, bool origin = false) : kind_(k), origin_(origin) {}

  Kind kind() const { return kind_; }
  bool origin() const { return origin_; }
  bool acyclic() const { return kind_ == Kind::SuccessorGraph && !origin_; }
  std::string name() const;

  std::vector<Term> constants() const;
  std::vector<Term> representative_terms(const std::vector<Term>& vars) const;

  /// Decide a conjunction of index literals; Sat yields a finite model whose
  /// domain is the (merged) input terms.
  bool solve(const std::vector<Literal>& lits, IndexModel* model = nullptr) const;
  bool entails(const std::vector<Literal>& ctx, const Literal& l) const;
  bool refutes(const std::vector<Literal>& ctx, const Literal& l) const;

  /// All index structures of the given size (for the semantic oracle).
  /// Linear orders are canonical (0 < 1 < ...); successor graphs enumerate
  /// edge sets. Unsupported for the origin variant.
  struct Structure {
    int size = 0;
    std::vector<int> succ;                // -1 = no successor
    std::map<std::string, int> consts;
  };
  bool oracle_enumerable() const { return !origin_; }
  std::vector<Structure> enumerate_structures(int size) const;
  bool is_model(const Structure& s) const;

 private:
  Kind kind_;
  bool origin_;
};

/// Element theories: enumerated members, dense linear rational order, booleans.
/// All three decide conjunctions and admit quantifier elimination.
class ElemTheory {
 public:
  enum class Kind { Enumerated, Rational, Boolean };

  static ElemTheory enumerated(std::string sort, std::vector<std::string> members);
  static ElemTheory rational(std::string sort);
  static ElemTheory boolean(std::string sort);

  Kind kind() const { return kind_; }
  const std::string& sort() const { return sort_; }
  const std::vector<std::string>& members() const { return members_; }
  bool has_qe() const { return true; }
  bool locally_finite() const { return kind_ != Kind::Rational; }

  /// Conjunction satisfiability over element variables and constants
  /// (array reads must be abstracted to fresh variables by the caller).
  bool solve(const std::vector<Literal>& lits,
             std::map<std::string, ElemValue>* model = nullptr) const;
  bool entails(const std::vector<Literal>& ctx, const Literal& l) const;
  bool refutes(const std::vector<Literal>& ctx, const Literal& l) const;

  /// Quantifier elimination: a quantifier-free formula equivalent to
  /// ∃ vars . conj. Rationals use Fourier-Motzkin with disequations split
  /// into the two strict orders; enumerated sorts substitute or expand.
  Formula eliminate(const std::vector<Term>& vars, const std::vector<Literal>& conj) const;

  Term const_term(const std::string& member) const;

 private:
  Kind kind_;
  std::string sort_;
  std::vector<std::string> members_;
};

/// Equivalence relation over a finite set of index variables.
struct Arrangement {
  std::vector<std::vector<Term>> blocks;
};

/// All partitions of the given variables (Bell-number many).
std::vector<Arrangement> enumerate_arrangements(const std::vector<Term>& vars);

struct ArrayDecl {
  std::string name;
  std::string elem_sort;
};

/// The many-sorted signature of one array-based system.
struct Signature {
  std::shared_ptr<const IndexTheory> index;
  std::map<std::string, std::shared_ptr<const ElemTheory>> elems;
  std::vector<ArrayDecl> arrays;
  std::vector<Rational> numerals;  // rational numerals occurring in the spec

  const ElemTheory& elem_theory(const std::string& sort) const;
  const ArrayDecl* find_array(const std::string& name) const;
  const ElemTheory& array_theory(const std::string& array) const;
};

}  // namespace arraymc
