#include "arraymc/smt.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace arraymc {

namespace {

bool is_index_literal(const Literal& l) { return l.atom.is_index_atom(); }

// Translate an element literal, abstracting array reads to shared element
// variables; `pos_key` names the class of an index term.
Literal abstract_reads(const Literal& l,
                       const std::function<std::string(const Term&)>& pos_key) {
  Literal out = l;
  for (auto& a : out.atom.args) {
    if (a.kind() == TermKind::ArrayRead)
      a = Term::elem_var(a.name() + "@" + pos_key(a.index_arg()), a.elem_sort());
  }
  if (out.atom.kind == AtomKind::Eq) out.atom = Atom::eq(out.atom.args[0], out.atom.args[1]);
  return out;
}

std::string identity_key(const Term& t) { return t.str(); }

std::string elem_sort_of(const Literal& l) {
  for (const auto& a : l.atom.args)
    if (!a.is_index()) return a.elem_sort();
  return "";
}

// Negation of one literal as a disjunction of literals (total orders allow
// rewriting the negations of < and <=).
std::vector<Literal> negate_literal_clause(const Literal& l) {
  const Atom& a = l.atom;
  if (!l.pos) return {Literal{a, true}};
  switch (a.kind) {
    case AtomKind::Eq:
    case AtomKind::IdxPred:
      return {Literal{a, false}};
    case AtomKind::Lt:
      return {Literal{Atom::lt(a.args[1], a.args[0]), true},
              Literal{Atom::eq(a.args[0], a.args[1]), true}};
    case AtomKind::Le:
      return {Literal{Atom::lt(a.args[1], a.args[0]), true}};
  }
  return {};
}

// Asserted literal set with incremental consistency checking and memoized
// entailment / refutation queries.
struct UnitCtx {
  const Signature& sig;
  std::vector<Literal> idx;
  std::vector<Literal> elem_raw;
  std::map<std::string, std::vector<Literal>> elem;  // per sort, reads per-term
  std::unordered_map<std::string, bool> memo_ref;
  std::map<std::string, int> atom_true, atom_false;  // refcounted assertions
  std::vector<bool> appended_trail;

  explicit UnitCtx(const Signature& s) : sig(s) {}

  static std::string side_of(const Literal& l) {
    return is_index_literal(l) ? std::string("i") : elem_sort_of(l);
  }

  // Pushing literals only strengthens one side of the context: cached
  // refutations on that side stay valid, cached non-refutations may flip.
  // Popping is the mirror image. The other side is untouched.
  void invalidate_side(const std::string& side, bool keep_true) {
    for (auto it = memo_ref.begin(); it != memo_ref.end();) {
      bool same_side = it->first.compare(0, side.size() + 1, side + "|") == 0;
      if (same_side && it->second != keep_true) it = memo_ref.erase(it);
      else ++it;
    }
  }
  void invalidate_after_push() {
    for (auto it = memo_ref.begin(); it != memo_ref.end();)
      it = !it->second ? memo_ref.erase(it) : std::next(it);
  }
  void invalidate_after_pop() {
    for (auto it = memo_ref.begin(); it != memo_ref.end();)
      it = it->second ? memo_ref.erase(it) : std::next(it);
  }

  bool push_unchecked(const Literal& l) {
    std::string key = l.atom.str();
    auto& same = l.pos ? atom_true : atom_false;
    auto& other = l.pos ? atom_false : atom_true;
    auto ot = other.find(key);
    if (ot != other.end() && ot->second > 0) return false;
    bool append = ++same[key] == 1;  // duplicates are not re-asserted
    if (append) {
      if (is_index_literal(l)) {
        idx.push_back(l);
      } else {
        Literal al = abstract_reads(l, identity_key);
        elem[elem_sort_of(al)].push_back(al);
        elem_raw.push_back(l);
      }
    }
    appended_trail.push_back(append);
    return true;
  }

  bool consistent() {
    if (!sig.index->solve(idx)) return false;
    for (auto& [sort, bucket] : elem)
      if (!bucket.empty() && !sig.elem_theory(sort).solve(bucket)) return false;
    return true;
  }

  bool push(const Literal& l) {
    if (!push_unchecked(l)) return false;
    if (appended_trail.back()) {
      bool ok;
      if (is_index_literal(l)) {
        ok = sig.index->solve(idx);
      } else {
        const auto& bucket = elem[elem_sort_of(l)];
        ok = sig.elem_theory(elem_sort_of(l)).solve(bucket);
      }
      if (!ok) {
        pop_core(l);
        return false;
      }
      invalidate_side(side_of(l), true);
    }
    return true;
  }

  void pop_core(const Literal& l) {
    std::string key = l.atom.str();
    auto& same = l.pos ? atom_true : atom_false;
    bool appended = appended_trail.back();
    appended_trail.pop_back();
    if (--same[key] == 0) same.erase(key);
    if (appended) {
      if (is_index_literal(l)) {
        idx.pop_back();
      } else {
        elem[elem_sort_of(l)].pop_back();
        elem_raw.pop_back();
      }
    }
  }

  void pop(const Literal& l) {
    pop_core(l);
    invalidate_side(side_of(l), false);
  }

  // Assert many literals with a single consistency check at the end.
  bool push_batch(const std::vector<Literal>& ls, size_t* pushed) {
    size_t n = 0;
    bool ok = true;
    std::set<std::string> sides;
    for (const auto& l : ls) {
      if (!push_unchecked(l)) {
        ok = false;
        break;
      }
      sides.insert(side_of(l));
      n++;
    }
    *pushed = n;
    for (const auto& s : sides) invalidate_side(s, true);
    return ok && consistent();
  }

  void pop_batch(const std::vector<Literal>& ls, size_t pushed) {
    std::set<std::string> sides;
    for (size_t i = pushed; i-- > 0;) {
      pop_core(ls[i]);
      sides.insert(side_of(ls[i]));
    }
    for (const auto& s : sides) invalidate_side(s, false);
  }

  bool syntactically_refuted(const Literal& l) const {
    std::string key = l.atom.str();
    const auto& other = l.pos ? atom_false : atom_true;
    auto it = other.find(key);
    return it != other.end() && it->second > 0;
  }

  // current set ∧ l unsatisfiable
  bool refuted(const Literal& l) {
    std::string key = (l.pos ? "+" : "-") + l.atom.str();
    auto it = memo_ref.find(key);
    if (it != memo_ref.end()) return it->second;
    bool r;
    if (is_index_literal(l)) {
      r = sig.index->refutes(idx, l);
    } else {
      Literal al = abstract_reads(l, identity_key);
      std::string sort = elem_sort_of(al);
      auto eit = elem.find(sort);
      static const std::vector<Literal> empty;
      const auto& bucket = eit == elem.end() ? empty : eit->second;
      r = sig.elem_theory(sort).refutes(bucket, al);
    }
    memo_ref[key] = r;
    return r;
  }

  // current set ⊨ l
  bool entailed(const Literal& l) {
    for (const auto& neg : negate_literal_clause(l))
      if (!refuted(neg)) return false;
    return true;
  }
};

struct GroundProblem {
  std::vector<Literal> units;
  std::vector<std::vector<Literal>> clauses;
  std::vector<Formula> complex;

  void add(const Formula& f) {
    switch (f.kind()) {
      case Formula::Kind::True:
        return;
      case Formula::Kind::False:
        clauses.push_back({});
        return;
      case Formula::Kind::Lit:
        units.push_back(f.literal());
        return;
      case Formula::Kind::And:
        for (const auto& k : f.kids()) add(k);
        return;
      case Formula::Kind::Or: {
        std::vector<Literal> clause;
        for (const auto& k : f.kids()) {
          if (k.kind() != Formula::Kind::Lit) {
            complex.push_back(f);
            return;
          }
          clause.push_back(k.literal());
        }
        clauses.push_back(std::move(clause));
        return;
      }
      case Formula::Kind::Not:
        complex.push_back(f);
        return;
    }
  }
};

Formula ground_nnf(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Not: {
      const Formula& g = f.kids()[0];
      switch (g.kind()) {
        case Formula::Kind::True: return Formula::mk_false();
        case Formula::Kind::False: return Formula::mk_true();
        case Formula::Kind::Not: return ground_nnf(g.kids()[0]);
        case Formula::Kind::Lit: {
          std::vector<Formula> fs;
          for (const auto& l : negate_literal_clause(g.literal())) fs.push_back(Formula::lit(l));
          return Formula::mk_or(std::move(fs));
        }
        case Formula::Kind::And:
        case Formula::Kind::Or: {
          std::vector<Formula> ks;
          for (const auto& k : g.kids()) ks.push_back(ground_nnf(Formula::mk_not(k)));
          return g.kind() == Formula::Kind::And ? Formula::mk_or(std::move(ks))
                                                : Formula::mk_and(std::move(ks));
        }
      }
      return f;
    }
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<Formula> ks;
      for (const auto& k : f.kids()) ks.push_back(ground_nnf(k));
      return f.kind() == Formula::Kind::And ? Formula::mk_and(std::move(ks))
                                            : Formula::mk_or(std::move(ks));
    }
    default:
      return f;
  }
}

// DPLL-style search over the instantiated ground problem: assert units, shrink
// clauses against the asserted set, propagate forced literals, branch on a
// shortest clause, and complete the equality arrangement at the leaves.
class GroundSolver {
 public:
  GroundSolver(const Signature& sig, std::vector<Term> domain_terms)
      : ctx_(sig), domain_terms_(std::move(domain_terms)) {}

  bool solve(GroundProblem p, FiniteWitness* w) {
    witness_ = w;
    // NNF on the complex entries may expose plain clauses (negated cube
    // instances in particular), which the simplification loop handles far
    // better than blind branching
    GroundProblem q;
    q.units = std::move(p.units);
    q.clauses = std::move(p.clauses);
    for (const auto& f : p.complex) q.add(ground_nnf(f));
    std::sort(q.units.begin(), q.units.end());
    q.units.erase(std::unique(q.units.begin(), q.units.end()), q.units.end());
    for (auto& c : q.clauses) std::sort(c.begin(), c.end());
    std::sort(q.clauses.begin(), q.clauses.end());
    q.clauses.erase(std::unique(q.clauses.begin(), q.clauses.end()), q.clauses.end());
    return assert_units(q.units, q);
  }

 private:
  UnitCtx ctx_;
  std::vector<Term> domain_terms_;
  FiniteWitness* witness_ = nullptr;

  bool assert_units(const std::vector<Literal>& units, GroundProblem& p) {
    size_t pushed = 0;
    bool ok = ctx_.push_batch(units, &pushed);
    if (ok) ok = step(p);
    ctx_.pop_batch(units, pushed);
    return ok;
  }

  bool step(GroundProblem& p) {
    // simplify clauses and collect forced literals
    std::vector<Literal> forced;
    std::vector<std::vector<Literal>> live;
    for (const auto& c : p.clauses) {
      std::vector<Literal> alive;
      bool sat = false;
      for (const auto& l : c) {
        if (ctx_.entailed(l)) {
          sat = true;
          break;
        }
        if (!ctx_.refuted(l)) alive.push_back(l);
      }
      if (sat) continue;
      if (alive.empty()) return false;
      if (alive.size() == 1) forced.push_back(alive[0]);
      else live.push_back(std::move(alive));
    }
    if (!forced.empty()) {
      GroundProblem q;
      q.clauses = std::move(live);
      q.complex = p.complex;
      return assert_units(forced, q);
    }
    if (!live.empty()) {
      size_t best = 0;
      for (size_t i = 1; i < live.size(); ++i)
        if (live[i].size() < live[best].size()) best = i;
      std::vector<Literal> clause = std::move(live[best]);
      live.erase(live.begin() + best);
      GroundProblem q;
      q.clauses = std::move(live);
      q.complex = p.complex;
      for (const auto& l : clause) {
        if (assert_units({l}, q)) return true;
      }
      return false;
    }
    if (!p.complex.empty()) {
      Formula f = p.complex.back();
      GroundProblem q;
      q.complex.assign(p.complex.begin(), p.complex.end() - 1);
      switch (f.kind()) {
        case Formula::Kind::Or: {
          for (const auto& k : f.kids()) {
            GroundProblem q2 = q;
            q2.add(k);
            std::vector<Literal> units = std::move(q2.units);
            q2.units.clear();
            if (assert_units(units, q2)) return true;
          }
          return false;
        }
        default: {
          GroundProblem q2 = q;
          q2.add(f);
          std::vector<Literal> units = std::move(q2.units);
          q2.units.clear();
          return assert_units(units, q2);
        }
      }
    }
    return leaf();
  }

  // Make the arrangement over the involved index terms explicit: branch on
  // undecided equalities, then merge, propagate to the element side, and run
  // the final per-sort solver calls.
  bool leaf() {
    std::vector<Term> terms = involved_index_terms();
    for (size_t i = 0; i < terms.size(); ++i)
      for (size_t j = i + 1; j < terms.size(); ++j) {
        Literal eq{Atom::eq(terms[i], terms[j]), true};
        Literal ne = eq.negated();
        if (ctx_.refuted(ne) || ctx_.refuted(eq)) continue;  // decided
        if (ctx_.push(ne)) {
          bool ok = leaf();
          ctx_.pop(ne);
          if (ok) return true;
        }
        if (ctx_.push(eq)) {
          bool ok = leaf();
          ctx_.pop(eq);
          return ok;
        }
        return false;
      }
    return final_check(terms);
  }

  std::vector<Term> involved_index_terms() {
    std::vector<Term> ts = domain_terms_;
    auto add = [&ts](const Term& t) {
      if (std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
    };
    for (const auto& l : ctx_.idx)
      for (const auto& a : l.atom.args) add(a);
    std::vector<Term> reads;
    for (const auto& l : ctx_.elem_raw)
      for (const auto& a : l.atom.args) a.collect_reads(reads);
    for (const auto& r : reads) add(r.index_arg());
    return ts;
  }

  bool final_check(const std::vector<Term>& terms) {
    int n = static_cast<int>(terms.size());
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (!ctx_.refuted(Literal{Atom::eq(terms[i], terms[j]), true}) &&
            ctx_.entailed(Literal{Atom::eq(terms[i], terms[j]), true}))
          parent[find(j)] = find(i);
    std::map<int, int> cls;
    for (int i = 0; i < n; ++i) {
      int r = find(i);
      if (!cls.count(r)) cls.emplace(r, static_cast<int>(cls.size()));
    }
    auto key_of = [&](const Term& t) -> std::string {
      for (int i = 0; i < n; ++i)
        if (terms[i] == t) return std::to_string(cls.at(find(i)));
      return "t:" + t.str();
    };
    std::map<std::string, std::vector<Literal>> buckets;
    for (const auto& l : ctx_.elem_raw) {
      Literal al = abstract_reads(l, key_of);
      buckets[elem_sort_of(al)].push_back(al);
    }
    std::map<std::string, std::map<std::string, ElemValue>> models;
    for (auto& [sort, lits] : buckets)
      if (!ctx_.sig.elem_theory(sort).solve(lits, &models[sort])) return false;
    if (witness_) build_witness(terms, cls, find, models);
    return true;
  }

  void build_witness(const std::vector<Term>& terms, const std::map<int, int>& cls,
                     const std::function<int(int)>& find,
                     std::map<std::string, std::map<std::string, ElemValue>>& models) {
    FiniteWitness w;
    int n = static_cast<int>(terms.size());
    int n_classes = static_cast<int>(cls.size());
    std::vector<Term> rep(n_classes);
    for (int i = 0; i < n; ++i) {
      int c = cls.at(find(i));
      if (!rep[c].valid()) rep[c] = terms[i];
    }
    // fix the arrangement explicitly and extract a concrete relation structure
    std::vector<Literal> lits = ctx_.idx;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        lits.push_back(Literal{Atom::eq(terms[i], terms[j]), cls.at(find(i)) == cls.at(find(j))});
    IndexModel im;
    bool solved = ctx_.sig.index->solve(lits, &im);
    assert(solved);
    (void)solved;
    std::vector<int> order(n_classes);
    for (int i = 0; i < n_classes; ++i) order[i] = i;
    if (ctx_.sig.index->kind() == IndexTheory::Kind::LinearOrder) {
      std::vector<int> rank(n_classes, 0);
      for (int c = 0; c < n_classes; ++c) {
        int mc = im.cls_of(rep[c]);
        rank[c] = mc >= 0 ? im.rank[mc] : 0;
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return rank[a] < rank[b]; });
    }
    std::vector<int> pos_of_class(n_classes);
    for (int p = 0; p < n_classes; ++p) pos_of_class[order[p]] = p;
    w.size = n_classes;
    w.structure.size = n_classes;
    w.structure.succ.assign(n_classes, -1);
    if (ctx_.sig.index->kind() == IndexTheory::Kind::SuccessorGraph) {
      for (int c = 0; c < n_classes; ++c) {
        int mc = im.cls_of(rep[c]);
        if (mc < 0 || im.succ[mc] < 0) continue;
        for (int d = 0; d < n_classes; ++d)
          if (im.cls_of(rep[d]) == im.succ[mc]) {
            w.structure.succ[pos_of_class[c]] = pos_of_class[d];
            break;
          }
      }
    }
    for (int i = 0; i < n; ++i) {
      int p = pos_of_class[cls.at(find(i))];
      w.index_assign[terms[i].str()] = p;
      if (terms[i].kind() == TermKind::IndexConst) w.structure.consts[terms[i].name()] = p;
    }
    for (const auto& ad : ctx_.sig.arrays) {
      const ElemTheory& th = ctx_.sig.elem_theory(ad.elem_sort);
      ElemValue dflt = th.kind() == ElemTheory::Kind::Rational
                           ? ElemValue::of_rat(Rational(0))
                           : ElemValue::of_sym(th.members().front());
      w.array_vals[ad.name].assign(n_classes, dflt);
    }
    for (auto& [sort, model] : models) {
      (void)sort;
      for (auto& [name, val] : model) {
        auto at = name.find('@');
        if (at == std::string::npos) {
          w.elem_assign[name] = val;
          continue;
        }
        std::string arr = name.substr(0, at);
        std::string cls_str = name.substr(at + 1);
        if (cls_str.rfind("t:", 0) == 0 || !w.array_vals.count(arr)) continue;
        w.array_vals[arr][pos_of_class[std::stoi(cls_str)]] = val;
      }
    }
    *witness_ = std::move(w);
  }
};

}  // namespace

// ---------- public entry points ----------------------------------------------

void SmtEngine::bump(CheckKind k) {
  switch (k) {
    case CheckKind::Safety: n_safety_++; break;
    case CheckKind::Fixpoint: n_fixpoint_++; break;
    case CheckKind::Other: n_other_++; break;
  }
}

void SmtEngine::maybe_dump(const Sentence& s, CheckKind k) {
  if (dump_dir_.empty()) return;
  const char* tag =
      k == CheckKind::Safety ? "safety" : k == CheckKind::Fixpoint ? "fixpoint" : "check";
  long n = dump_counter_.fetch_add(1);
  char buf[64];
  snprintf(buf, sizeof buf, "/%s_%05ld.smt2", tag, n);
  dump_smtlib2(s, dump_dir_ + buf);
}

SmtEngine::Result SmtEngine::check_sentence(const Sentence& s) {
  return decide(s, CheckKind::Other);
}

SmtEngine::Result SmtEngine::decide(const Sentence& s, CheckKind kind) {
  bump(kind);
  maybe_dump(s, kind);

  std::vector<Term> evars = s.evars;
  std::vector<Term> reps = sig_.index->representative_terms(evars);
  if (reps.empty()) {
    evars.push_back(fresh_index_var("i"));
    reps = evars;
  }

  std::vector<Formula> conjuncts;
  if (s.uvars.empty()) {
    conjuncts.push_back(s.matrix);
  } else {
    size_t k = s.uvars.size();
    std::vector<size_t> pick(k, 0);
    while (true) {
      std::map<std::string, Term> sigma;
      for (size_t i = 0; i < k; ++i) sigma.emplace(s.uvars[i].name(), reps[pick[i]]);
      conjuncts.push_back(s.matrix.substitute(sigma));
      size_t i = 0;
      for (; i < k; ++i) {
        if (++pick[i] < reps.size()) break;
        pick[i] = 0;
      }
      if (i == k) break;
    }
  }

  GroundProblem p;
  for (const auto& f : conjuncts) p.add(f);

  GroundSolver solver(sig_, reps);
  Result r;
  r.sat = solver.solve(std::move(p), &r.witness);
  if (r.sat) {
    Sentence closed = s;
    closed.evars = evars;
    minimize_witness(r.witness, closed);
  }
  return r;
}

bool SmtEngine::check_cube_sat(const Cube& c, FiniteWitness* w) {
  bump(CheckKind::Other);
  // differentiated cubes split directly; no arrangement guessing needed
  std::vector<Literal> idx;
  std::map<std::string, std::vector<Literal>> elem;
  for (const auto& l : c.lits) {
    if (is_index_literal(l)) idx.push_back(l);
    else {
      Literal al = abstract_reads(l, identity_key);
      elem[elem_sort_of(al)].push_back(al);
    }
  }
  if (!sig_.index->solve(idx)) return false;
  for (auto& [sort, lits] : elem)
    if (!sig_.elem_theory(sort).solve(lits)) return false;
  if (w) {
    GroundProblem p;
    p.units = c.lits;
    GroundSolver solver(sig_, sig_.index->representative_terms(c.vars));
    bool ok = solver.solve(std::move(p), w);
    assert(ok);
    (void)ok;
  }
  return true;
}

bool SmtEngine::check_safety(const ForallI& init, const Cube& c) {
  Sentence s;
  s.evars = c.vars;
  std::map<std::string, Term> ren;
  for (const auto& v : init.vars) {
    Term f = fresh_index_var(v.name());
    ren.emplace(v.name(), f);
    s.uvars.push_back(f);
  }
  s.matrix = Formula::mk_and({c.matrix(), init.matrix.substitute(ren)});
  return decide(s, CheckKind::Safety).sat;
}

bool SmtEngine::implies(const ExistsI& a, const ExistsI& b) {
  Sentence s;
  s.evars = a.vars;
  std::map<std::string, Term> ren;
  for (const auto& v : b.vars) {
    Term f = fresh_index_var(v.name());
    ren.emplace(v.name(), f);
    s.uvars.push_back(f);
  }
  s.matrix = Formula::mk_and({a.matrix, Formula::mk_not(b.matrix.substitute(ren))});
  return !decide(s, CheckKind::Other).sat;
}

// ---------- fix-point ----------------------------------------------------------

namespace {

// Enumerate substitutions of a prior cube's variables into the candidate terms
// that keep every fully-instantiated literal consistent with the cube context.
class InstanceMatcher {
 public:
  InstanceMatcher(const Cube& prior, const std::vector<Term>& candidates, UnitCtx& ctx)
      : prior_(prior), candidates_(candidates), ctx_(ctx) {}

  // on_full returns false to abort the whole enumeration
  void run(const std::function<bool(const std::map<std::string, Term>&)>& on_full) {
    on_full_ = &on_full;
    rec(0);
  }

 private:
  const Cube& prior_;
  const std::vector<Term>& candidates_;
  UnitCtx& ctx_;
  std::map<std::string, Term> sigma_;
  const std::function<bool(const std::map<std::string, Term>&)>* on_full_ = nullptr;

  bool rec(size_t vi) {
    if (vi == prior_.vars.size()) return (*on_full_)(sigma_);
    const Term& v = prior_.vars[vi];
    for (const auto& cand : candidates_) {
      sigma_[v.name()] = cand;
      bool viable = true;
      for (const auto& l : prior_.lits) {
        std::vector<Term> vs;
        for (const auto& a : l.atom.args) a.collect_vars(vs);
        bool uses_v = false, all_bound = true;
        for (const auto& u : vs) {
          if (u.kind() != TermKind::IndexVar) continue;
          if (u.name() == v.name()) uses_v = true;
          if (!sigma_.count(u.name())) all_bound = false;
        }
        if (!uses_v || !all_bound) continue;
        Literal inst = l;
        for (auto& a : inst.atom.args) a = a.substitute(sigma_);
        if (inst.atom.kind == AtomKind::Eq)
          inst.atom = Atom::eq(inst.atom.args[0], inst.atom.args[1]);
        if (ctx_.refuted(inst)) {
          viable = false;
          break;
        }
      }
      if (viable && !rec(vi + 1)) {
        sigma_.erase(v.name());
        return false;
      }
    }
    sigma_.erase(v.name());
    return true;
  }
};

Literal apply_sigma(const Literal& l, const std::map<std::string, Term>& sigma) {
  Literal inst = l;
  for (auto& a : inst.atom.args) a = a.substitute(sigma);
  if (inst.atom.kind == AtomKind::Eq) inst.atom = Atom::eq(inst.atom.args[0], inst.atom.args[1]);
  return inst;
}

}  // namespace

namespace {

bool subsumed_in_ctx(const Cube& prior, UnitCtx& ctx, const std::vector<Term>& candidates) {
  bool found = false;
  InstanceMatcher m(prior, candidates, ctx);
  m.run([&](const std::map<std::string, Term>& sigma) {
    for (const auto& l : prior.lits)
      if (!ctx.entailed(apply_sigma(l, sigma))) return true;  // keep searching
    found = true;
    return false;
  });
  return found;
}

}  // namespace

bool SmtEngine::subsumes(const Cube& prior, const Cube& c) {
  if (prior.vars.size() > c.vars.size() + sig_.index->constants().size()) return false;
  UnitCtx ctx(sig_);
  size_t pushed = 0;
  if (!ctx.push_batch(c.lits, &pushed)) return true;  // inconsistent cube: covered
  return subsumed_in_ctx(prior, ctx, sig_.index->representative_terms(c.vars));
}

bool SmtEngine::subsumes_any(const std::vector<Cube>& priors, const Cube& c) {
  UnitCtx ctx(sig_);
  size_t pushed = 0;
  if (!ctx.push_batch(c.lits, &pushed)) return true;
  std::vector<Term> candidates = sig_.index->representative_terms(c.vars);
  for (const auto& p : priors) {
    if (p.vars.size() > candidates.size()) continue;
    if (subsumed_in_ctx(p, ctx, candidates)) return true;
  }
  return false;
}

bool SmtEngine::check_fixpoint(const Cube& c, const std::vector<Cube>& priors) {
  bump(CheckKind::Fixpoint);
  if (!dump_dir_.empty()) {
    Sentence s;
    s.evars = c.vars;
    std::vector<Formula> parts{c.matrix()};
    for (auto it = priors.rbegin(); it != priors.rend(); ++it) {
      std::map<std::string, Term> ren;
      for (const auto& v : it->vars) {
        Term f = fresh_index_var(v.name());
        ren.emplace(v.name(), f);
        s.uvars.push_back(f);
      }
      parts.push_back(Formula::mk_not(it->matrix().substitute(ren)));
    }
    s.matrix = Formula::mk_and(parts);
    maybe_dump(s, CheckKind::Fixpoint);
  }

  UnitCtx ctx(sig_);
  for (const auto& l : c.lits)
    if (!ctx.push(l)) return true;  // cube unsatisfiable

  std::vector<Term> candidates = sig_.index->representative_terms(c.vars);

  // newest-first: single-prior subsumption short-circuits most closures
  for (auto it = priors.rbegin(); it != priors.rend(); ++it)
    if (subsumed_in_ctx(*it, ctx, candidates)) return true;

  // full instantiation of every ¬K' block over c's representative terms
  std::vector<std::vector<Literal>> clauses;
  bool covered = false;
  for (auto it = priors.rbegin(); it != priors.rend() && !covered; ++it) {
    InstanceMatcher m(*it, candidates, ctx);
    m.run([&](const std::map<std::string, Term>& sigma) {
      std::vector<Literal> residual;
      for (const auto& l : it->lits) {
        Literal inst = apply_sigma(l, sigma);
        if (ctx.refuted(inst)) return true;  // instance trivially satisfied
        if (!ctx.entailed(inst)) residual.push_back(inst);
      }
      if (residual.empty()) {
        covered = true;
        return false;
      }
      std::vector<Literal> clause;
      for (const auto& l : residual)
        for (const auto& nl : negate_literal_clause(l)) clause.push_back(nl);
      std::sort(clause.begin(), clause.end());
      clause.erase(std::unique(clause.begin(), clause.end()), clause.end());
      clauses.push_back(std::move(clause));
      return true;
    });
  }
  if (covered) return true;
  if (clauses.empty()) return false;

  std::sort(clauses.begin(), clauses.end());
  clauses.erase(std::unique(clauses.begin(), clauses.end()), clauses.end());

  GroundProblem p;
  p.units = c.lits;
  p.clauses = std::move(clauses);
  GroundSolver solver(sig_, candidates);
  return !solver.solve(std::move(p), nullptr);
}

// ---------- witness evaluation / minimization ----------------------------------

namespace {

struct WitnessEnv {
  const FiniteWitness& w;
  std::map<std::string, int> ivars;
};

int eval_index_term(const Term& t, const WitnessEnv& env) {
  if (t.kind() == TermKind::IndexVar) {
    auto it = env.ivars.find(t.name());
    if (it != env.ivars.end()) return it->second;
    auto jt = env.w.index_assign.find(t.str());
    if (jt != env.w.index_assign.end()) return jt->second;
    return 0;
  }
  if (t.kind() == TermKind::IndexConst) {
    auto it = env.w.structure.consts.find(t.name());
    return it == env.w.structure.consts.end() ? 0 : it->second;
  }
  throw std::logic_error("not an index term");
}

ElemValue eval_elem_term(const Term& t, const WitnessEnv& env) {
  switch (t.kind()) {
    case TermKind::ElemConst:
      return t.numeral() ? ElemValue::of_rat(*t.numeral()) : ElemValue::of_sym(t.name());
    case TermKind::ElemVar: {
      auto it = env.w.elem_assign.find(t.name());
      if (it != env.w.elem_assign.end()) return it->second;
      return ElemValue::of_sym("?");
    }
    case TermKind::ArrayRead: {
      int p = eval_index_term(t.index_arg(), env);
      return env.w.array_vals.at(t.name()).at(p);
    }
    default:
      throw std::logic_error("not an element term");
  }
}

bool eval_literal_w(const Literal& l, const WitnessEnv& env) {
  const Atom& a = l.atom;
  bool v = false;
  if (a.kind == AtomKind::IdxPred) {
    int x = eval_index_term(a.args[0], env);
    int y = eval_index_term(a.args[1], env);
    v = env.w.structure.succ[x] == y;
  } else if (a.args[0].is_index()) {
    int x = eval_index_term(a.args[0], env);
    int y = eval_index_term(a.args[1], env);
    switch (a.kind) {
      case AtomKind::Eq: v = x == y; break;
      case AtomKind::Lt: v = x < y; break;  // positions carry the linear order
      case AtomKind::Le: v = x <= y; break;
      default: break;
    }
  } else {
    ElemValue x = eval_elem_term(a.args[0], env);
    ElemValue y = eval_elem_term(a.args[1], env);
    switch (a.kind) {
      case AtomKind::Eq: v = x == y; break;
      case AtomKind::Lt: v = x < y; break;
      case AtomKind::Le: v = x < y || x == y; break;
      default: break;
    }
  }
  return v == l.pos;
}

bool eval_formula_w(const Formula& f, const WitnessEnv& env) {
  switch (f.kind()) {
    case Formula::Kind::True: return true;
    case Formula::Kind::False: return false;
    case Formula::Kind::Lit: return eval_literal_w(f.literal(), env);
    case Formula::Kind::Not: return !eval_formula_w(f.kids()[0], env);
    case Formula::Kind::And:
      for (const auto& k : f.kids())
        if (!eval_formula_w(k, env)) return false;
      return true;
    case Formula::Kind::Or:
      for (const auto& k : f.kids())
        if (eval_formula_w(k, env)) return true;
      return false;
  }
  return false;
}

}  // namespace

bool SmtEngine::eval_on_witness(const FiniteWitness& w, const Sentence& s) const {
  if (w.size <= 0) return false;
  std::vector<size_t> pick(s.evars.size(), 0);
  while (true) {
    WitnessEnv env{w, {}};
    for (size_t i = 0; i < s.evars.size(); ++i)
      env.ivars[s.evars[i].name()] = static_cast<int>(pick[i]);
    std::vector<size_t> upick(s.uvars.size(), 0);
    bool all = true;
    while (true) {
      for (size_t i = 0; i < s.uvars.size(); ++i)
        env.ivars[s.uvars[i].name()] = static_cast<int>(upick[i]);
      if (!eval_formula_w(s.matrix, env)) {
        all = false;
        break;
      }
      size_t i = 0;
      for (; i < s.uvars.size(); ++i) {
        if (++upick[i] < static_cast<size_t>(w.size)) break;
        upick[i] = 0;
      }
      if (i == s.uvars.size()) break;
    }
    if (all) return true;
    size_t i = 0;
    for (; i < s.evars.size(); ++i) {
      if (++pick[i] < static_cast<size_t>(w.size)) break;
      pick[i] = 0;
    }
    if (i == s.evars.size()) return false;
  }
}

void SmtEngine::minimize_witness(FiniteWitness& w, const Sentence& s) const {
  bool changed = true;
  while (changed && w.size > 1) {
    changed = false;
    for (int drop = 0; drop < w.size; ++drop) {
      bool pinned = false;
      for (const auto& [n, p] : w.structure.consts)
        if (p == drop) pinned = true;
      if (pinned) continue;
      FiniteWitness r;
      r.size = w.size - 1;
      r.structure.size = r.size;
      std::vector<int> remap(w.size, -1);
      int q = 0;
      for (int p = 0; p < w.size; ++p)
        if (p != drop) remap[p] = q++;
      r.structure.succ.assign(r.size, -1);
      for (int p = 0; p < w.size; ++p) {
        if (p == drop) continue;
        int t = w.structure.succ[p];
        if (t >= 0 && t != drop) r.structure.succ[remap[p]] = remap[t];
      }
      for (const auto& [n, p] : w.structure.consts) r.structure.consts[n] = remap[p];
      for (const auto& [arr, vals] : w.array_vals) {
        auto& rv = r.array_vals[arr];
        for (int p = 0; p < w.size; ++p)
          if (p != drop) rv.push_back(vals[p]);
      }
      r.elem_assign = w.elem_assign;
      if (eval_on_witness(r, s)) {
        w = std::move(r);
        changed = true;
        break;
      }
    }
  }
}

std::string FiniteWitness::str() const {
  std::ostringstream os;
  os << "model(size=" << size;
  for (const auto& [arr, vals] : array_vals) {
    os << ", " << arr << "=[";
    for (int i = 0; i < size; ++i) os << (i ? "," : "") << vals[i].str();
    os << "]";
  }
  os << ")";
  return os.str();
}

// ---------- SMT-LIB2 ------------------------------------------------------------

namespace {

std::string smt_sym(const std::string& s) {
  std::string out;
  for (char c : s) out += (isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  if (!out.empty() && isdigit(static_cast<unsigned char>(out[0]))) out = "v" + out;
  return out;
}

std::string smt_sort(const Signature& sig, const std::string& elem_sort) {
  const ElemTheory& th = sig.elem_theory(elem_sort);
  switch (th.kind()) {
    case ElemTheory::Kind::Boolean: return "Bool";
    case ElemTheory::Kind::Rational: return "Real";
    case ElemTheory::Kind::Enumerated: return smt_sym("E_" + elem_sort);
  }
  return "?";
}

std::string smt_term(const Signature& sig, const Term& t) {
  switch (t.kind()) {
    case TermKind::IndexVar:
    case TermKind::IndexConst:
    case TermKind::ElemVar:
      return smt_sym(t.name());
    case TermKind::ElemConst: {
      if (t.numeral()) {
        const Rational& r = *t.numeral();
        if (r.den == 1)
          return r.num < 0 ? "(- " + std::to_string(-r.num) + ")" : std::to_string(r.num);
        return "(/ " + std::to_string(r.num) + " " + std::to_string(r.den) + ")";
      }
      const ElemTheory& th = sig.elem_theory(t.elem_sort());
      if (th.kind() == ElemTheory::Kind::Boolean) return t.name() == "tt" ? "true" : "false";
      return smt_sym("E_" + t.elem_sort() + "_" + t.name());
    }
    case TermKind::ArrayRead:
      return "(" + smt_sym(t.name()) + " " + smt_term(sig, t.index_arg()) + ")";
    case TermKind::CaseApp:
      throw std::logic_error("case application in SMT-LIB output");
  }
  return "?";
}

std::string smt_formula(const Signature& sig, const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::True: return "true";
    case Formula::Kind::False: return "false";
    case Formula::Kind::Lit: {
      const Literal& l = f.literal();
      const Atom& a = l.atom;
      bool index_side = a.args.empty() ? false : a.args[0].is_index();
      std::string s;
      switch (a.kind) {
        case AtomKind::Eq:
          s = "(= " + smt_term(sig, a.args[0]) + " " + smt_term(sig, a.args[1]) + ")";
          break;
        case AtomKind::Lt:
          s = (index_side ? "(idx_lt " : "(< ") + smt_term(sig, a.args[0]) + " " +
              smt_term(sig, a.args[1]) + ")";
          break;
        case AtomKind::Le:
          if (index_side)
            s = "(or (idx_lt " + smt_term(sig, a.args[0]) + " " + smt_term(sig, a.args[1]) +
                ") (= " + smt_term(sig, a.args[0]) + " " + smt_term(sig, a.args[1]) + "))";
          else
            s = "(<= " + smt_term(sig, a.args[0]) + " " + smt_term(sig, a.args[1]) + ")";
          break;
        case AtomKind::IdxPred:
          s = "(" + smt_sym(a.pred) + " " + smt_term(sig, a.args[0]) + " " +
              smt_term(sig, a.args[1]) + ")";
          break;
      }
      return l.pos ? s : "(not " + s + ")";
    }
    case Formula::Kind::Not:
      return "(not " + smt_formula(sig, f.kids()[0]) + ")";
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::string s = f.kind() == Formula::Kind::And ? "(and" : "(or";
      for (const auto& k : f.kids()) s += " " + smt_formula(sig, k);
      return s + ")";
    }
  }
  return "?";
}

}  // namespace

std::string SmtEngine::smtlib2_text(const Sentence& s) const {
  std::ostringstream os;
  os << "(set-logic ALL)\n(declare-sort Index 0)\n";
  for (const auto& [name, th] : sig_.elems) {
    if (th->kind() == ElemTheory::Kind::Enumerated) {
      os << "(declare-datatypes ((" << smt_sym("E_" + name) << " 0)) ((";
      for (const auto& m : th->members()) os << "(" << smt_sym("E_" + name + "_" + m) << ")";
      os << ")))\n";
    }
  }
  switch (sig_.index->kind()) {
    case IndexTheory::Kind::PureEquality:
      break;
    case IndexTheory::Kind::LinearOrder:
      os << "(declare-fun idx_lt (Index Index) Bool)\n"
            "(assert (forall ((x Index)) (not (idx_lt x x))))\n"
            "(assert (forall ((x Index) (y Index) (z Index))\n"
            "  (=> (and (idx_lt x y) (idx_lt y z)) (idx_lt x z))))\n"
            "(assert (forall ((x Index) (y Index)) (or (idx_lt x y) (idx_lt y x) (= x y))))\n";
      break;
    case IndexTheory::Kind::SuccessorGraph:
      os << "(declare-fun S (Index Index) Bool)\n"
            "(assert (forall ((x Index) (y Index) (z Index))\n"
            "  (=> (and (S x y) (S x z)) (= y z))))\n"
            "(assert (forall ((x Index) (y Index) (z Index))\n"
            "  (=> (and (S x z) (S y z)) (= x y))))\n";
      if (sig_.index->origin()) {
        os << "(declare-const o Index)\n(declare-const o1 Index)\n"
              "(assert (S o o1))\n"
              "(assert (forall ((x Index)) (not (S x o))))\n";
      } else {
        os << "; S is additionally acyclic (omitted, not finitely axiomatizable);\n"
              "; unsat answers transfer to the acyclic class unchanged\n";
      }
      break;
  }
  for (const auto& a : sig_.arrays)
    os << "(declare-fun " << smt_sym(a.name) << " (Index) " << smt_sort(sig_, a.elem_sort)
       << ")\n";

  std::string inner = smt_formula(sig_, s.matrix);
  if (!s.uvars.empty()) {
    std::string q = "(forall (";
    for (const auto& v : s.uvars) q += "(" + smt_sym(v.name()) + " Index)";
    inner = q + ") " + inner + ")";
  }
  std::string binders;
  for (const auto& v : s.evars) binders += "(" + smt_sym(v.name()) + " Index)";
  for (const auto& v : s.eelems)
    binders += "(" + smt_sym(v.name()) + " " + smt_sort(sig_, v.elem_sort()) + ")";
  if (!binders.empty()) inner = "(exists (" + binders + ") " + inner + ")";
  os << "(assert " << inner << ")\n(check-sat)\n";
  return os.str();
}

void SmtEngine::dump_smtlib2(const Sentence& s, const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << smtlib2_text(s);
}

}  // namespace arraymc
