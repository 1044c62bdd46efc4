#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arraymc/rational.hpp"

namespace arraymc {

struct CaseFunction;

/// Sorts: the index sort, or a named element sort backed by an element theory.
struct Sort {
  bool index = true;
  std::string elem;  // element sort name when !index

  static Sort idx() { return Sort{true, ""}; }
  static Sort of_elem(std::string name) { return Sort{false, std::move(name)}; }
  bool operator==(const Sort& o) const { return index == o.index && elem == o.elem; }
  bool operator!=(const Sort& o) const { return !(*this == o); }
  std::string str() const { return index ? "index" : elem; }
};

enum class TermKind {
  IndexVar,
  IndexConst,   // theory constant of the index signature (successor-origin)
  ElemVar,
  ElemConst,    // enum member, boolean tt/ff, or rational numeral
  ArrayRead,    // a[i]
  CaseApp,      // pending case-function application, removed by elimination
};

class Term {
 public:
  Term() = default;

  static Term index_var(const std::string& name);
  static Term index_const(const std::string& name);
  static Term elem_var(const std::string& name, const std::string& sort);
  static Term elem_const(const std::string& symbol, const std::string& sort);
  static Term rat_const(const Rational& value, const std::string& sort);
  static Term array_read(const std::string& array, const std::string& elem_sort, const Term& idx);
  static Term case_app(std::shared_ptr<const CaseFunction> fn, const Term& idx_arg);

  bool valid() const { return node_ != nullptr; }
  TermKind kind() const;
  const std::string& name() const;        // var/const/array name or const symbol
  const std::string& elem_sort() const;   // for elem-sorted terms
  const std::optional<Rational>& numeral() const;
  const Term& index_arg() const;           // ArrayRead / CaseApp argument
  const std::shared_ptr<const CaseFunction>& case_fn() const;

  Sort sort() const;
  bool is_index() const { return sort().index; }

  bool operator==(const Term& o) const { return compare(o) == 0; }
  bool operator!=(const Term& o) const { return compare(o) != 0; }
  bool operator<(const Term& o) const { return compare(o) < 0; }
  int compare(const Term& o) const;
  size_t hash() const;
  std::string str() const;

  /// Simultaneous capture-free substitution of variables (index or elem).
  Term substitute(const std::map<std::string, Term>& m) const;
  bool contains_case_app() const;
  void collect_vars(std::vector<Term>& out) const;  // index + elem vars, deduped
  void collect_reads(std::vector<Term>& out) const;

  struct Node;  // opaque outside term.cpp

 private:
  std::shared_ptr<const Node> node_;
  explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  friend Term detail_make_term(std::shared_ptr<const Node> n);
};

enum class AtomKind { Eq, Lt, Le, IdxPred };

/// Theory-pure atom over terms. Eq is used at both sorts; Lt/Le at the
/// rational element sort or the linear-order index sort; IdxPred for named
/// index relations (the successor edge S).
struct Atom {
  AtomKind kind;
  std::string pred;  // relation name for IdxPred
  std::vector<Term> args;

  static Atom eq(Term a, Term b);
  static Atom lt(Term a, Term b) { return Atom{AtomKind::Lt, "", {std::move(a), std::move(b)}}; }
  static Atom le(Term a, Term b) { return Atom{AtomKind::Le, "", {std::move(a), std::move(b)}}; }
  static Atom idx_pred(std::string name, std::vector<Term> args) {
    return Atom{AtomKind::IdxPred, std::move(name), std::move(args)};
  }

  bool is_index_atom() const;
  int compare(const Atom& o) const;
  bool operator==(const Atom& o) const { return compare(o) == 0; }
  std::string str() const;
};

struct Literal {
  Atom atom;
  bool pos = true;

  Literal negated() const { return Literal{atom, !pos}; }
  int compare(const Literal& o) const {
    int c = atom.compare(o.atom);
    return c != 0 ? c : (pos == o.pos ? 0 : (pos ? 1 : -1));
  }
  bool operator==(const Literal& o) const { return compare(o) == 0; }
  bool operator<(const Literal& o) const { return compare(o) < 0; }
  std::string str() const;
};

}  // namespace arraymc
