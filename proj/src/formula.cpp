#include "arraymc/formula.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <set>
#include <sstream>
#include <stdexcept>

namespace arraymc {

struct Formula::Node {
  Kind kind;
  Literal lit{Atom{AtomKind::Eq, "", {}}, true};
  std::vector<Formula> kids;
};

Formula Formula::mk_true() {
  auto n = std::make_shared<Node>();
  n->kind = Kind::True;
  return Formula(std::move(n));
}
Formula Formula::mk_false() {
  auto n = std::make_shared<Node>();
  n->kind = Kind::False;
  return Formula(std::move(n));
}
Formula Formula::lit(Literal l) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Lit;
  n->lit = std::move(l);
  return Formula(std::move(n));
}
Formula Formula::mk_not(Formula f) {
  if (f.kind() == Kind::True) return mk_false();
  if (f.kind() == Kind::False) return mk_true();
  if (f.kind() == Kind::Not) return f.kids()[0];
  auto n = std::make_shared<Node>();
  n->kind = Kind::Not;
  n->kids = {std::move(f)};
  return Formula(std::move(n));
}
Formula Formula::mk_and(std::vector<Formula> fs) {
  std::vector<Formula> kids;
  for (auto& f : fs) {
    if (f.kind() == Kind::False) return mk_false();
    if (f.kind() == Kind::True) continue;
    if (f.kind() == Kind::And) {
      for (const auto& k : f.kids()) kids.push_back(k);
    } else {
      kids.push_back(std::move(f));
    }
  }
  if (kids.empty()) return mk_true();
  if (kids.size() == 1) return kids[0];
  auto n = std::make_shared<Node>();
  n->kind = Kind::And;
  n->kids = std::move(kids);
  return Formula(std::move(n));
}
Formula Formula::mk_or(std::vector<Formula> fs) {
  std::vector<Formula> kids;
  for (auto& f : fs) {
    if (f.kind() == Kind::True) return mk_true();
    if (f.kind() == Kind::False) continue;
    if (f.kind() == Kind::Or) {
      for (const auto& k : f.kids()) kids.push_back(k);
    } else {
      kids.push_back(std::move(f));
    }
  }
  if (kids.empty()) return mk_false();
  if (kids.size() == 1) return kids[0];
  auto n = std::make_shared<Node>();
  n->kind = Kind::Or;
  n->kids = std::move(kids);
  return Formula(std::move(n));
}
Formula Formula::conj(const std::vector<Literal>& ls) {
  std::vector<Formula> fs;
  fs.reserve(ls.size());
  for (const auto& l : ls) fs.push_back(lit(l));
  return mk_and(std::move(fs));
}

Formula::Kind Formula::kind() const { return node_->kind; }
const Literal& Formula::literal() const { return node_->lit; }
const std::vector<Formula>& Formula::kids() const { return node_->kids; }

Formula Formula::substitute(const std::map<std::string, Term>& m) const {
  switch (kind()) {
    case Kind::True:
    case Kind::False:
      return *this;
    case Kind::Lit: {
      Literal l = literal();
      bool changed = false;
      for (auto& a : l.atom.args) {
        Term t = a.substitute(m);
        if (t != a) { a = t; changed = true; }
      }
      if (!changed) return *this;
      if (l.atom.kind == AtomKind::Eq) l.atom = Atom::eq(l.atom.args[0], l.atom.args[1]);
      return lit(std::move(l));
    }
    default: {
      std::vector<Formula> ks;
      ks.reserve(kids().size());
      for (const auto& k : kids()) ks.push_back(k.substitute(m));
      if (kind() == Kind::Not) return mk_not(ks[0]);
      return kind() == Kind::And ? mk_and(std::move(ks)) : mk_or(std::move(ks));
    }
  }
}

bool Formula::contains_case_app() const {
  if (kind() == Kind::Lit) {
    for (const auto& a : literal().atom.args)
      if (a.contains_case_app()) return true;
    return false;
  }
  for (const auto& k : kids())
    if (k.contains_case_app()) return true;
  return false;
}

void Formula::collect_vars(std::vector<Term>& out) const {
  if (kind() == Kind::Lit) {
    for (const auto& a : literal().atom.args) a.collect_vars(out);
    return;
  }
  for (const auto& k : kids()) k.collect_vars(out);
}

void Formula::collect_reads(std::vector<Term>& out) const {
  if (kind() == Kind::Lit) {
    for (const auto& a : literal().atom.args) a.collect_reads(out);
    return;
  }
  for (const auto& k : kids()) k.collect_reads(out);
}

std::string Formula::str() const {
  switch (kind()) {
    case Kind::True: return "true";
    case Kind::False: return "false";
    case Kind::Lit: return literal().str();
    case Kind::Not: return "!(" + kids()[0].str() + ")";
    case Kind::And:
    case Kind::Or: {
      std::string op = kind() == Kind::And ? " & " : " | ";
      std::string s = "(";
      for (size_t i = 0; i < kids().size(); ++i) s += (i ? op : "") + kids()[i].str();
      return s + ")";
    }
  }
  return "?";
}

int Formula::compare(const Formula& o) const {
  if (node_ == o.node_) return 0;
  if (kind() != o.kind()) return kind() < o.kind() ? -1 : 1;
  if (kind() == Kind::Lit) return literal().compare(o.literal());
  if (kids().size() != o.kids().size()) return kids().size() < o.kids().size() ? -1 : 1;
  for (size_t i = 0; i < kids().size(); ++i)
    if (int c = kids()[i].compare(o.kids()[i])) return c;
  return 0;
}

std::string ExistsI::str() const {
  std::string s = "exists";
  for (const auto& v : vars) s += " " + v.str();
  return s + " . " + matrix.str();
}
std::string ForallI::str() const {
  std::string s = "forall";
  for (const auto& v : vars) s += " " + v.str();
  return s + " . " + matrix.str();
}

Formula CaseFunction::partition_guard(size_t k) const {
  std::vector<Formula> parts;
  size_t upto = std::min(k, branches.size());
  for (size_t i = 0; i < upto; ++i) parts.push_back(Formula::mk_not(branches[i].guard));
  if (k < branches.size()) parts.push_back(branches[k].guard);
  return Formula::mk_and(std::move(parts));
}

Term CaseFunction::branch_value(size_t k) const {
  if (k < branches.size()) return branches[k].value;
  if (!else_value) throw std::logic_error("case function has no else branch");
  return *else_value;
}

// --- case elimination --------------------------------------------------------

namespace {

// Find one case application inside a term (innermost first).
bool find_case_app(const Term& t, Term& found) {
  if (t.kind() == TermKind::ArrayRead) return find_case_app(t.index_arg(), found);
  if (t.kind() == TermKind::CaseApp) {
    if (find_case_app(t.index_arg(), found)) return true;
    found = t;
    return true;
  }
  return false;
}

Term replace_term(const Term& in, const Term& target, const Term& repl) {
  if (in == target) return repl;
  if (in.kind() == TermKind::ArrayRead) {
    Term c = replace_term(in.index_arg(), target, repl);
    if (c == in.index_arg()) return in;
    return Term::array_read(in.name(), in.elem_sort(), c);
  }
  if (in.kind() == TermKind::CaseApp) {
    Term c = replace_term(in.index_arg(), target, repl);
    if (c == in.index_arg()) return in;
    return Term::case_app(in.case_fn(), c);
  }
  return in;
}

Formula expand_atom(const Literal& l) {
  Term app;
  bool has = false;
  for (const auto& a : l.atom.args)
    if (find_case_app(a, app)) { has = true; break; }
  if (!has) return Formula::lit(l);

  const auto& fn = *app.case_fn();
  std::map<std::string, Term> sigma{{fn.univ_param.name(), app.index_arg()}};
  std::vector<Formula> cases;
  for (size_t k = 0; k < fn.case_count(); ++k) {
    Formula guard = fn.partition_guard(k).substitute(sigma);
    Term value = fn.branch_value(k).substitute(sigma);
    Literal l2 = l;
    for (auto& a : l2.atom.args) a = replace_term(a, app, value);
    if (l2.atom.kind == AtomKind::Eq) l2.atom = Atom::eq(l2.atom.args[0], l2.atom.args[1]);
    cases.push_back(Formula::mk_and({guard, expand_atom(l2)}));
  }
  return Formula::mk_or(std::move(cases));
}

}  // namespace

Formula eliminate_case_functions(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::True:
    case Formula::Kind::False:
      return f;
    case Formula::Kind::Lit:
      return expand_atom(f.literal());
    default: {
      std::vector<Formula> ks;
      for (const auto& k : f.kids()) ks.push_back(eliminate_case_functions(k));
      if (f.kind() == Formula::Kind::Not) return Formula::mk_not(ks[0]);
      return f.kind() == Formula::Kind::And ? Formula::mk_and(std::move(ks))
                                            : Formula::mk_or(std::move(ks));
    }
  }
}

Formula substitute(const Formula& f, const std::map<std::string, Term>& m) {
  return f.substitute(m);
}

// --- NNF / DNF ---------------------------------------------------------------

namespace {

// Negate a single literal into an equivalent positive-form formula. Total
// orders let ¬(a<b) and ¬(a<=b) be rewritten; equality atoms just flip.
Formula negate_literal(const Literal& l) {
  const Atom& a = l.atom;
  if (!l.pos) return Formula::lit(Literal{a, true});
  switch (a.kind) {
    case AtomKind::Eq:
    case AtomKind::IdxPred:
      return Formula::lit(Literal{a, false});
    case AtomKind::Lt:
      return Formula::mk_or({Formula::lit(Atom::lt(a.args[1], a.args[0])),
                             Formula::lit(Atom::eq(a.args[0], a.args[1]))});
    case AtomKind::Le:
      return Formula::lit(Atom::lt(a.args[1], a.args[0]));
  }
  return Formula::mk_false();
}

Formula nnf(const Formula& f, bool neg) {
  switch (f.kind()) {
    case Formula::Kind::True: return neg ? Formula::mk_false() : Formula::mk_true();
    case Formula::Kind::False: return neg ? Formula::mk_true() : Formula::mk_false();
    case Formula::Kind::Lit: return neg ? negate_literal(f.literal()) : f;
    case Formula::Kind::Not: return nnf(f.kids()[0], !neg);
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      bool is_and = (f.kind() == Formula::Kind::And) != neg;
      std::vector<Formula> ks;
      for (const auto& k : f.kids()) ks.push_back(nnf(k, neg));
      return is_and ? Formula::mk_and(std::move(ks)) : Formula::mk_or(std::move(ks));
    }
  }
  return f;
}

// Trivial syntactic contradiction check for early pruning during DNF.
bool conj_trivially_false(const std::vector<Literal>& c) {
  for (const auto& l : c) {
    // t != t
    if (!l.pos && l.atom.kind == AtomKind::Eq && l.atom.args[0] == l.atom.args[1]) return true;
    if (l.pos && l.atom.kind == AtomKind::Lt && l.atom.args[0] == l.atom.args[1]) return true;
    for (const auto& o : c)
      if (o.atom == l.atom && o.pos != l.pos) return true;
    // distinct constants equated
    if (l.pos && l.atom.kind == AtomKind::Eq) {
      const Term& x = l.atom.args[0];
      const Term& y = l.atom.args[1];
      if (x.kind() == TermKind::ElemConst && y.kind() == TermKind::ElemConst && x != y) {
        if (x.numeral() && y.numeral()) {
          if (*x.numeral() != *y.numeral()) return true;
        } else {
          return true;
        }
      }
    }
  }
  return false;
}

void dnf_rec(const Formula& f, std::vector<Literal>& acc,
             std::vector<std::vector<Literal>>& out) {
  switch (f.kind()) {
    case Formula::Kind::True:
      out.push_back(acc);
      return;
    case Formula::Kind::False:
      return;
    case Formula::Kind::Lit: {
      const Literal& l = f.literal();
      // incremental contradiction screen against the accumulated conjunction
      bool dead = false;
      if (!l.pos && l.atom.kind == AtomKind::Eq && l.atom.args[0] == l.atom.args[1]) dead = true;
      if (l.pos && l.atom.kind == AtomKind::Lt && l.atom.args[0] == l.atom.args[1]) dead = true;
      if (l.pos && l.atom.kind == AtomKind::Eq) {
        const Term& x = l.atom.args[0];
        const Term& y = l.atom.args[1];
        if (x.kind() == TermKind::ElemConst && y.kind() == TermKind::ElemConst && x != y &&
            (!x.numeral() || !y.numeral() || *x.numeral() != *y.numeral()))
          dead = true;
      }
      if (!dead)
        for (const auto& o : acc)
          if (o.atom == l.atom && o.pos != l.pos) { dead = true; break; }
      if (!dead) {
        acc.push_back(l);
        out.push_back(acc);
        acc.pop_back();
      }
      return;
    }
    case Formula::Kind::And: {
      // peel the first conjunct, distribute over the rest
      std::vector<Formula> rest(f.kids().begin() + 1, f.kids().end());
      Formula tail = Formula::mk_and(std::move(rest));
      std::vector<std::vector<Literal>> heads;
      dnf_rec(f.kids()[0], acc, heads);
      for (auto& h : heads) {
        std::vector<Literal> acc2 = std::move(h);
        std::vector<std::vector<Literal>> tails;
        dnf_rec(tail, acc2, tails);
        for (auto& t : tails) out.push_back(std::move(t));
      }
      return;
    }
    case Formula::Kind::Or:
      for (const auto& k : f.kids()) dnf_rec(k, acc, out);
      return;
    case Formula::Kind::Not:
      throw std::logic_error("dnf input not in NNF");
  }
}

std::vector<std::vector<Literal>> dnf_of_nnf(const Formula& f) {
  std::vector<Literal> acc;
  std::vector<std::vector<Literal>> out;
  dnf_rec(f, acc, out);
  for (auto& c : out) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  return out;
}

}  // namespace

std::vector<std::vector<Literal>> negate_to_dnf(const Formula& f) {
  return dnf_of_nnf(nnf(f, true));
}

std::vector<std::vector<Literal>> to_dnf(const Formula& f) {
  return dnf_of_nnf(nnf(f, false));
}

// --- cubes & differentiation -------------------------------------------------

std::vector<Term> free_index_vars(const Formula& f) {
  std::vector<Term> vars;
  f.collect_vars(vars);
  std::vector<Term> out;
  for (const auto& v : vars)
    if (v.kind() == TermKind::IndexVar) out.push_back(v);
  return out;
}

Term fresh_index_var(const std::string& stem) {
  static std::atomic<unsigned long> counter{0};
  return Term::index_var(stem + "_" + std::to_string(counter.fetch_add(1)));
}

bool Cube::differentiated() const {
  for (size_t i = 0; i < vars.size(); ++i)
    for (size_t j = i + 1; j < vars.size(); ++j) {
      Literal want{Atom::eq(vars[i], vars[j]), false};
      if (std::find(lits.begin(), lits.end(), want) == lits.end()) return false;
    }
  return true;
}

std::string Cube::str() const {
  std::string s = "exists";
  for (const auto& v : vars) s += " " + v.str();
  s += " . {";
  for (size_t i = 0; i < lits.size(); ++i) s += (i ? ", " : "") + lits[i].str();
  return s + "}";
}

Cube Cube::canonical() const {
  // stable greedy rename: order variables by their occurrence signature
  std::vector<Literal> sorted = lits;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::string> sig;
  for (const auto& v : vars) {
    // literals touching v, with v marked and other variables blanked
    std::map<std::string, Term> mv;
    for (const auto& u : vars)
      mv.emplace(u.name(), u == v ? Term::index_var("@") : Term::index_var("*"));
    std::string s;
    for (const auto& l : sorted) {
      Literal shaped = l;
      for (auto& a : shaped.atom.args) a = a.substitute(mv);
      if (shaped.str().find('@') != std::string::npos) s += shaped.str() + ";";
    }
    sig.push_back(s);
  }
  std::vector<size_t> order(vars.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return sig[a] < sig[b]; });
  std::map<std::string, Term> rename;
  std::vector<Term> new_vars;
  for (size_t k = 0; k < order.size(); ++k) {
    Term nv = Term::index_var("v" + std::to_string(k));
    rename.emplace(vars[order[k]].name(), nv);
    new_vars.push_back(nv);
  }
  Cube out;
  out.vars = std::move(new_vars);
  for (const auto& l : lits) {
    Literal l2 = l;
    for (auto& a : l2.atom.args) a = a.substitute(rename);
    if (l2.atom.kind == AtomKind::Eq) l2.atom = Atom::eq(l2.atom.args[0], l2.atom.args[1]);
    out.lits.push_back(l2);
  }
  std::sort(out.lits.begin(), out.lits.end());
  out.lits.erase(std::unique(out.lits.begin(), out.lits.end()), out.lits.end());
  return out;
}

std::string Cube::key() const {
  Cube c = canonical();
  std::string s;
  for (const auto& l : c.lits) s += l.str() + "&";
  return s;
}

namespace {

// Collect the index constants mentioned by a literal set.
std::vector<Term> occurring_index_consts(const std::vector<Literal>& lits) {
  std::vector<Term> out;
  std::function<void(const Term&)> walk = [&](const Term& t) {
    if (t.kind() == TermKind::IndexConst) {
      if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    }
    if (t.kind() == TermKind::ArrayRead || t.kind() == TermKind::CaseApp) walk(t.index_arg());
  };
  for (const auto& l : lits)
    for (const auto& a : l.atom.args) walk(a);
  return out;
}

struct Differ {
  const CubeSatFn& is_sat;
  std::vector<Cube>& out;

  // merge explicit index equalities, then split the undecided pairs
  void start(std::vector<Term> vars, std::vector<Literal> lits) {
    for (size_t i = 0; i < lits.size(); ++i) {
      const Literal& l = lits[i];
      if (!l.pos || l.atom.kind != AtomKind::Eq) continue;
      const Term& x = l.atom.args[0];
      const Term& y = l.atom.args[1];
      if (!x.is_index()) continue;
      if (x == y) {
        lits.erase(lits.begin() + i);
        start(std::move(vars), std::move(lits));
        return;
      }
      Term from, to;
      if (x.kind() == TermKind::IndexVar) { from = x; to = y; }
      else if (y.kind() == TermKind::IndexVar) { from = y; to = x; }
      else continue;  // constant = constant, keep for the solver
      std::map<std::string, Term> m{{from.name(), to}};
      std::vector<Literal> lits2;
      lits2.reserve(lits.size());
      for (const auto& q : lits) {
        Literal q2 = q;
        for (auto& a : q2.atom.args) a = a.substitute(m);
        if (q2.atom.kind == AtomKind::Eq) q2.atom = Atom::eq(q2.atom.args[0], q2.atom.args[1]);
        lits2.push_back(q2);
      }
      std::vector<Term> vars2;
      for (const auto& v : vars)
        if (v != from) vars2.push_back(v);
      start(std::move(vars2), std::move(lits2));
      return;
    }

    if (conj_trivially_false(lits)) return;

    std::vector<Term> terms = vars;
    for (const auto& c : occurring_index_consts(lits)) terms.push_back(c);
    std::vector<std::pair<Term, Term>> pending;
    for (size_t i = 0; i < terms.size(); ++i)
      for (size_t j = i + 1; j < terms.size(); ++j) {
        if (terms[i].kind() != TermKind::IndexVar && terms[j].kind() != TermKind::IndexVar)
          continue;  // two constants: solver decides
        Literal ne{Atom::eq(terms[i], terms[j]), false};
        if (std::find(lits.begin(), lits.end(), ne) != lits.end()) continue;
        pending.push_back({terms[i], terms[j]});
      }
    split(vars, lits, pending, 0);
  }

  void split(std::vector<Term>& vars, std::vector<Literal>& lits,
             std::vector<std::pair<Term, Term>>& pending, size_t k) {
    if (k == pending.size()) {
      std::vector<Literal> fin = lits;
      std::sort(fin.begin(), fin.end());
      fin.erase(std::unique(fin.begin(), fin.end()), fin.end());
      Cube c{vars, std::move(fin)};
      if (is_sat && !is_sat(c)) return;
      out.push_back(std::move(c));
      return;
    }
    // merged branch: restart with the equality made explicit
    {
      std::vector<Literal> eq_branch = lits;
      eq_branch.push_back(Literal{Atom::eq(pending[k].first, pending[k].second), true});
      start(vars, std::move(eq_branch));
    }
    // differentiated branch: in place
    lits.push_back(Literal{Atom::eq(pending[k].first, pending[k].second), false});
    split(vars, lits, pending, k + 1);
    lits.pop_back();
  }
};

void differentiate(std::vector<Term> vars, std::vector<Literal> lits,
                   const CubeSatFn& is_sat, std::vector<Cube>& out) {
  Differ d{is_sat, out};
  d.start(std::move(vars), std::move(lits));
}

}  // namespace

std::vector<Cube> to_primitive_differentiated(const ExistsI& f, const CubeSatFn& is_sat) {
  Formula body = f.matrix;
  if (body.contains_case_app()) body = eliminate_case_functions(body);
  std::vector<Cube> out;
  for (auto& conj : to_dnf(body)) {
    // quantified vars that actually matter: those of the formula
    differentiate(f.vars, std::move(conj), is_sat, out);
  }
  // drop duplicates modulo the canonical renaming
  std::set<std::string> seen;
  std::vector<Cube> dedup;
  for (auto& c : out) {
    std::string k = c.key();
    if (seen.insert(k).second) dedup.push_back(std::move(c));
  }
  return dedup;
}

}  // namespace arraymc
