#include "arraymc/oracle.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace arraymc {

namespace {

std::string chain_key(const Configuration& c, int start) {
  std::string s;
  int cur = start;
  std::set<int> seen;
  while (cur >= 0 && !seen.count(cur)) {
    seen.insert(cur);
    s += "(";
    for (const auto& [arr, vals] : c.vals) s += vals[cur].str() + ",";
    s += ")";
    cur = c.structure.succ[cur];
  }
  return s;
}

}  // namespace

std::string Configuration::key() const { return str(); }

std::string Configuration::str() const {
  std::ostringstream os;
  os << "cfg(n=" << size;
  for (const auto& [arr, vals] : vals) {
    os << " " << arr << "=[";
    for (int p = 0; p < size; ++p) os << (p ? "," : "") << vals[p].str();
    os << "]";
  }
  bool has_succ = false;
  for (int v : structure.succ)
    if (v >= 0) has_succ = true;
  if (has_succ) {
    os << " S={";
    for (int p = 0; p < size; ++p)
      if (structure.succ[p] >= 0) os << p << "->" << structure.succ[p] << " ";
    os << "}";
  }
  os << ")";
  return os.str();
}

std::vector<ElemValue> Oracle::value_domain(const std::string& sort, int max_index_size) const {
  const ElemTheory& th = spec_.sig.elem_theory(sort);
  std::vector<ElemValue> out;
  if (th.kind() == ElemTheory::Kind::Rational) {
    int points = 2 * max_index_size + 1;
    if (points < 1) throw std::invalid_argument("rational grid too small");
    // the grid must dominate the spec's numerals so pinned comparisons stay
    // realizable; place grid points strictly between and around them
    std::vector<Rational> nums = spec_.sig.numerals;
    std::sort(nums.begin(), nums.end(), [](const Rational& a, const Rational& b) { return a < b; });
    nums.erase(std::unique(nums.begin(), nums.end()), nums.end());
    std::vector<Rational> grid;
    for (int i = 0; i < points; ++i) grid.push_back(Rational(i));
    for (const auto& q : nums) grid.push_back(q);
    // and midpoints/offsets around numerals
    for (const auto& q : nums) {
      grid.push_back(q.minus_one());
      grid.push_back(q.plus_one());
    }
    std::sort(grid.begin(), grid.end(), [](const Rational& a, const Rational& b) { return a < b; });
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](const Rational& a, const Rational& b) { return a == b; }),
               grid.end());
    for (const auto& q : grid) out.push_back(ElemValue::of_rat(q));
  } else {
    for (const auto& m : th.members()) out.push_back(ElemValue::of_sym(m));
  }
  return out;
}

// Canonical form up to index isomorphism, per theory shape.
std::string Oracle::iso_key(const Configuration& c) const {
  std::ostringstream os;
  os << c.size << "|";
  switch (spec_.sig.index->kind()) {
    case IndexTheory::Kind::PureEquality: {
      std::vector<std::string> rows(c.size);
      for (int p = 0; p < c.size; ++p)
        for (const auto& [arr, vals] : c.vals) rows[p] += vals[p].str() + ",";
      std::sort(rows.begin(), rows.end());
      for (const auto& r : rows) os << r << ";";
      return os.str();
    }
    case IndexTheory::Kind::LinearOrder: {
      // a linear order has no nontrivial automorphisms
      for (int p = 0; p < c.size; ++p) {
        for (const auto& [arr, vals] : c.vals) os << vals[p].str() << ",";
        os << ";";
      }
      return os.str();
    }
    case IndexTheory::Kind::SuccessorGraph: {
      std::vector<int> indeg(c.size, 0);
      for (int p = 0; p < c.size; ++p)
        if (c.structure.succ[p] >= 0) indeg[c.structure.succ[p]]++;
      std::vector<std::string> chains;
      for (int p = 0; p < c.size; ++p)
        if (indeg[p] == 0) chains.push_back(chain_key(c, p));
      std::sort(chains.begin(), chains.end());
      for (const auto& ch : chains) os << ch << ";";
      for (const auto& [n, p] : c.structure.consts) os << n << "@" << chain_key(c, p) << ";";
      return os.str();
    }
  }
  return c.str();
}

std::vector<Configuration> Oracle::enumerate_configurations(int max_index_size) const {
  std::vector<Configuration> out;
  if (max_index_size <= 0) return out;
  std::set<std::string> seen;
  for (int n = 1; n <= max_index_size; ++n) {
    auto structures = spec_.sig.index->enumerate_structures(n);
    // per-array value domains
    std::vector<std::vector<ElemValue>> domains;
    for (const auto& a : spec_.sig.arrays) domains.push_back(value_domain(a.elem_sort, max_index_size));
    for (const auto& st : structures) {
      Configuration base;
      base.size = n;
      base.structure = st;
      for (const auto& a : spec_.sig.arrays) base.vals[a.name].assign(n, ElemValue{});
      // enumerate all value assignments
      size_t cells = spec_.sig.arrays.size() * static_cast<size_t>(n);
      std::vector<size_t> pick(cells, 0);
      while (true) {
        Configuration c = base;
        for (size_t ai = 0; ai < spec_.sig.arrays.size(); ++ai)
          for (int p = 0; p < n; ++p)
            c.vals[spec_.sig.arrays[ai].name][p] = domains[ai][pick[ai * n + p]];
        std::string k = iso_key(c);
        if (seen.insert(k).second) out.push_back(std::move(c));
        size_t i = 0;
        for (; i < cells; ++i) {
          size_t ai = i / n;
          if (++pick[i] < domains[ai].size()) break;
          pick[i] = 0;
        }
        if (i == cells) break;
      }
    }
  }
  return out;
}

// --- evaluation ----------------------------------------------------------------

namespace {

int eval_idx(const Configuration& c, const Term& t, const std::map<std::string, int>& env) {
  if (t.kind() == TermKind::IndexVar) {
    auto it = env.find(t.name());
    if (it == env.end()) throw std::logic_error("unbound index variable " + t.name());
    return it->second;
  }
  if (t.kind() == TermKind::IndexConst) {
    auto it = c.structure.consts.find(t.name());
    if (it == c.structure.consts.end()) throw std::logic_error("unbound constant " + t.name());
    return it->second;
  }
  throw std::logic_error("not an index term");
}

ElemValue eval_elem(const Configuration& c, const Term& t, const std::map<std::string, int>& env) {
  switch (t.kind()) {
    case TermKind::ElemConst:
      return t.numeral() ? ElemValue::of_rat(*t.numeral()) : ElemValue::of_sym(t.name());
    case TermKind::ArrayRead:
      return c.vals.at(t.name()).at(eval_idx(c, t.index_arg(), env));
    default:
      throw std::logic_error("cannot evaluate element term " + t.str());
  }
}

}  // namespace

bool Oracle::eval_matrix(const Configuration& c, const Formula& f,
                         const std::map<std::string, int>& env) const {
  switch (f.kind()) {
    case Formula::Kind::True: return true;
    case Formula::Kind::False: return false;
    case Formula::Kind::Not: return !eval_matrix(c, f.kids()[0], env);
    case Formula::Kind::And:
      for (const auto& k : f.kids())
        if (!eval_matrix(c, k, env)) return false;
      return true;
    case Formula::Kind::Or:
      for (const auto& k : f.kids())
        if (eval_matrix(c, k, env)) return true;
      return false;
    case Formula::Kind::Lit: {
      const Literal& l = f.literal();
      const Atom& a = l.atom;
      bool v = false;
      if (a.kind == AtomKind::IdxPred) {
        int x = eval_idx(c, a.args[0], env);
        int y = eval_idx(c, a.args[1], env);
        v = c.structure.succ[x] == y;
      } else if (a.args[0].is_index()) {
        int x = eval_idx(c, a.args[0], env);
        int y = eval_idx(c, a.args[1], env);
        switch (a.kind) {
          case AtomKind::Eq: v = x == y; break;
          case AtomKind::Lt: v = x < y; break;
          case AtomKind::Le: v = x <= y; break;
          default: break;
        }
      } else {
        ElemValue x = eval_elem(c, a.args[0], env);
        ElemValue y = eval_elem(c, a.args[1], env);
        switch (a.kind) {
          case AtomKind::Eq: v = x == y; break;
          case AtomKind::Lt: v = x < y; break;
          case AtomKind::Le: v = x < y || x == y; break;
          default: break;
        }
      }
      return v == l.pos;
    }
  }
  return false;
}

namespace {

bool quantified_eval(const Oracle& o, const Configuration& c, const std::vector<Term>& vars,
                     const Formula& matrix, bool existential) {
  std::vector<size_t> pick(vars.size(), 0);
  if (c.size <= 0) return !existential;
  while (true) {
    std::map<std::string, int> env;
    for (size_t i = 0; i < vars.size(); ++i) env[vars[i].name()] = static_cast<int>(pick[i]);
    bool v = o.eval_matrix(c, matrix, env);
    if (existential && v) return true;
    if (!existential && !v) return false;
    size_t i = 0;
    for (; i < vars.size(); ++i) {
      if (++pick[i] < static_cast<size_t>(c.size)) break;
      pick[i] = 0;
    }
    if (i == vars.size()) return !existential;
  }
}

}  // namespace

bool Oracle::eval(const Configuration& c, const ExistsI& f) const {
  return quantified_eval(*this, c, f.vars, f.matrix, true);
}
bool Oracle::eval(const Configuration& c, const ForallI& f) const {
  return quantified_eval(*this, c, f.vars, f.matrix, false);
}

// --- transition semantics ---------------------------------------------------------

std::vector<Configuration> Oracle::step(const Configuration& c, const TransitionRule& t) const {
  std::vector<Configuration> out;
  std::set<std::string> seen;
  std::vector<size_t> pick(t.vars.size(), 0);
  if (c.size <= 0) return out;
  while (true) {
    std::map<std::string, int> env;
    for (size_t i = 0; i < t.vars.size(); ++i) env[t.vars[i].name()] = static_cast<int>(pick[i]);
    if (eval_matrix(c, t.guard, env)) {
      Configuration succ = c;
      for (const auto& [arr, fn] : t.updates) {
        auto& nv = succ.vals[arr];
        for (int j = 0; j < c.size; ++j) {
          std::map<std::string, int> jenv = env;
          jenv[fn->univ_param.name()] = j;
          // ordered branches: first raw guard that holds
          bool done = false;
          for (const auto& b : fn->branches) {
            if (eval_matrix(c, b.guard, jenv)) {
              nv[j] = eval_elem(c, b.value, jenv);
              done = true;
              break;
            }
          }
          if (!done) {
            if (!fn->else_value) throw std::logic_error("non-exhaustive case in " + t.name);
            nv[j] = eval_elem(c, *fn->else_value, jenv);
          }
        }
      }
      std::string k = succ.key() + succ.str();
      if (seen.insert(k).second) out.push_back(std::move(succ));
    }
    size_t i = 0;
    for (; i < t.vars.size(); ++i) {
      if (++pick[i] < static_cast<size_t>(c.size)) break;
      pick[i] = 0;
    }
    if (i == t.vars.size()) break;
  }
  return out;
}

std::vector<Configuration> Oracle::oracle_preimage(const TransitionRule& t, const ExistsI& f,
                                                   int max_index_size) const {
  std::vector<Configuration> out;
  for (const auto& c : enumerate_configurations(max_index_size)) {
    for (const auto& s : step(c, t)) {
      if (eval(s, f)) {
        out.push_back(c);
        break;
      }
    }
  }
  return out;
}

// --- embedding pre-order -----------------------------------------------------------

bool Oracle::config_leq(const Configuration& s, const Configuration& t) const {
  if (s.size > t.size) return false;
  const auto kind = spec_.sig.index->kind();
  std::vector<int> mu(s.size, -1);
  std::vector<bool> used(t.size, false);

  auto relations_ok = [&](int x, int tx) {
    // against already-mapped positions
    for (int y = 0; y < s.size; ++y) {
      if (mu[y] < 0 || y == x) continue;
      int ty = mu[y];
      if (kind == IndexTheory::Kind::LinearOrder) {
        if ((x < y) != (tx < ty)) return false;
      } else if (kind == IndexTheory::Kind::SuccessorGraph) {
        if ((s.structure.succ[x] == y) != (t.structure.succ[tx] == ty)) return false;
        if ((s.structure.succ[y] == x) != (t.structure.succ[ty] == tx)) return false;
      }
    }
    if (kind == IndexTheory::Kind::SuccessorGraph) {
      // self loops (none in the acyclic class, but stay faithful)
      if ((s.structure.succ[x] == x) != (t.structure.succ[tx] == tx)) return false;
    }
    // constants must be fixed
    for (const auto& [n, p] : s.structure.consts) {
      auto it = t.structure.consts.find(n);
      if (it == t.structure.consts.end()) return false;
      if ((p == x) != (it->second == tx)) return false;
    }
    return true;
  };

  auto values_ok = [&](int x, int tx) {
    for (const auto& a : spec_.sig.arrays) {
      const ElemTheory& th = spec_.sig.elem_theory(a.elem_sort);
      const ElemValue& sv = s.vals.at(a.name)[x];
      const ElemValue& tv = t.vals.at(a.name)[tx];
      if (th.kind() != ElemTheory::Kind::Rational) {
        if (!(sv == tv)) return false;  // identity embedding on enumerated sorts
      } else {
        // order-embedding fixing numerals: compare against mapped reads
        for (const auto& b : spec_.sig.arrays) {
          if (spec_.sig.elem_theory(b.elem_sort).kind() != ElemTheory::Kind::Rational) continue;
          if (b.elem_sort != a.elem_sort) continue;
          for (int y = 0; y < s.size; ++y) {
            if (mu[y] < 0) continue;
            const ElemValue& sw = s.vals.at(b.name)[y];
            const ElemValue& tw = t.vals.at(b.name)[mu[y]];
            int cs = sv.rat.cmp(sw.rat);
            int ct = tv.rat.cmp(tw.rat);
            if ((cs < 0) != (ct < 0) || (cs == 0) != (ct == 0)) return false;
          }
        }
        for (const auto& q : spec_.sig.numerals) {
          int cs = sv.rat.cmp(q);
          int ct = tv.rat.cmp(q);
          if ((cs < 0) != (ct < 0) || (cs == 0) != (ct == 0)) return false;
        }
      }
    }
    return true;
  };

  std::function<bool(int)> rec = [&](int x) -> bool {
    if (x == s.size) return true;
    for (int tx = 0; tx < t.size; ++tx) {
      if (used[tx]) continue;
      mu[x] = tx;
      if (relations_ok(x, tx) && values_ok(x, tx)) {
        used[tx] = true;
        if (rec(x + 1)) return true;
        used[tx] = false;
      }
      mu[x] = -1;
    }
    return false;
  };
  return rec(0);
}

bool Oracle::config_equiv(const Configuration& s, const Configuration& t) const {
  if (s.size != t.size) return false;
  return config_leq(s, t) && config_leq(t, s);
}

// --- diagram formulas ----------------------------------------------------------------

Cube Oracle::diagram_formula(const Configuration& c) const {
  const auto kind = spec_.sig.index->kind();
  std::vector<Term> term_of(c.size);
  Cube cube;
  std::map<int, std::string> const_at;
  for (const auto& [n, p] : c.structure.consts) const_at[p] = n;
  for (int p = 0; p < c.size; ++p) {
    if (const_at.count(p)) {
      term_of[p] = Term::index_const(const_at[p]);
    } else {
      term_of[p] = Term::index_var("i" + std::to_string(p));
      cube.vars.push_back(term_of[p]);
    }
  }
  for (int p = 0; p < c.size; ++p)
    for (int q = p + 1; q < c.size; ++q) {
      if (term_of[p].kind() == TermKind::IndexConst && term_of[q].kind() == TermKind::IndexConst)
        continue;
      cube.lits.push_back(Literal{Atom::eq(term_of[p], term_of[q]), false});
      if (kind == IndexTheory::Kind::LinearOrder)
        cube.lits.push_back(Literal{Atom::lt(term_of[p], term_of[q]), true});
    }
  if (kind == IndexTheory::Kind::SuccessorGraph) {
    for (int p = 0; p < c.size; ++p)
      for (int q = 0; q < c.size; ++q) {
        if (p == q) continue;
        bool edge = c.structure.succ[p] == q;
        cube.lits.push_back(
            Literal{Atom::idx_pred("S", {term_of[p], term_of[q]}), edge});
      }
  }
  // element diagram
  for (const auto& a : spec_.sig.arrays) {
    const ElemTheory& th = spec_.sig.elem_theory(a.elem_sort);
    if (th.kind() != ElemTheory::Kind::Rational) {
      for (int p = 0; p < c.size; ++p) {
        Term read = Term::array_read(a.name, a.elem_sort, term_of[p]);
        cube.lits.push_back(
            Literal{Atom::eq(read, Term::elem_const(c.vals.at(a.name)[p].sym, a.elem_sort)), true});
      }
    }
  }
  // rational sorts: order diagram over all reads of that sort plus numerals
  std::map<std::string, std::vector<std::pair<Term, Rational>>> rats;  // sort -> (read, value)
  for (const auto& a : spec_.sig.arrays) {
    const ElemTheory& th = spec_.sig.elem_theory(a.elem_sort);
    if (th.kind() != ElemTheory::Kind::Rational) continue;
    for (int p = 0; p < c.size; ++p)
      rats[a.elem_sort].push_back(
          {Term::array_read(a.name, a.elem_sort, term_of[p]), c.vals.at(a.name)[p].rat});
  }
  for (auto& [sort, reads] : rats) {
    for (const auto& q : spec_.sig.numerals) reads.push_back({Term::rat_const(q, sort), q});
    for (size_t i = 0; i < reads.size(); ++i)
      for (size_t j = i + 1; j < reads.size(); ++j) {
        if (reads[i].first.kind() == TermKind::ElemConst &&
            reads[j].first.kind() == TermKind::ElemConst)
          continue;
        int cmp = reads[i].second.cmp(reads[j].second);
        if (cmp == 0)
          cube.lits.push_back(Literal{Atom::eq(reads[i].first, reads[j].first), true});
        else if (cmp < 0)
          cube.lits.push_back(Literal{Atom::lt(reads[i].first, reads[j].first), true});
        else
          cube.lits.push_back(Literal{Atom::lt(reads[j].first, reads[i].first), true});
      }
  }
  std::sort(cube.lits.begin(), cube.lits.end());
  cube.lits.erase(std::unique(cube.lits.begin(), cube.lits.end()), cube.lits.end());
  return cube;
}

std::vector<Configuration> Oracle::basis_of(const ExistsI& f, int max_index_size) const {
  std::vector<Configuration> sats;
  for (const auto& c : enumerate_configurations(max_index_size))
    if (eval(c, f)) sats.push_back(c);
  std::vector<Configuration> basis;
  for (const auto& s : sats) {
    bool minimal = true;
    for (const auto& s2 : sats) {
      if (config_leq(s2, s) && !config_leq(s, s2)) {
        minimal = false;
        break;
      }
    }
    if (!minimal) continue;
    bool dup = false;
    for (const auto& b : basis)
      if (config_equiv(b, s)) {
        dup = true;
        break;
      }
    if (!dup) basis.push_back(s);
  }
  return basis;
}

bool Oracle::covers_check(const ExistsI& k, const ExistsI& l, int bound, SmtEngine& engine) const {
  if (!engine.implies(l, k)) return false;
  auto bk = basis_of(k, bound);
  auto bl = basis_of(l, bound);
  for (const auto& s : bk) {
    bool below = false;
    for (const auto& t : bl)
      if (config_leq(s, t)) {
        below = true;
        break;
      }
    if (!below) return false;
  }
  return true;
}

std::optional<std::vector<Configuration>> Oracle::replay(const std::vector<std::string>& trace,
                                                         int max_index_size) const {
  struct Path {
    std::vector<Configuration> run;
  };
  std::vector<Path> frontier;
  for (const auto& c : enumerate_configurations(max_index_size))
    if (eval(c, spec_.init)) frontier.push_back(Path{{c}});
  for (const auto& tname : trace) {
    const TransitionRule* t = spec_.find_transition(tname);
    if (!t) return std::nullopt;
    std::vector<Path> next;
    std::set<std::string> seen;
    for (const auto& p : frontier) {
      for (const auto& s : step(p.run.back(), *t)) {
        std::string key = s.key() + s.str();
        if (!seen.insert(key).second) continue;
        Path q = p;
        q.run.push_back(s);
        next.push_back(std::move(q));
      }
    }
    frontier = std::move(next);
    if (frontier.empty()) return std::nullopt;
  }
  for (const auto& p : frontier)
    if (eval(p.run.back(), spec_.unsafe)) return p.run;
  return std::nullopt;
}

bool Oracle::forward_reach_unsafe(int max_index_size, int depth) const {
  std::vector<Configuration> frontier;
  std::set<std::string> visited;
  for (const auto& c : enumerate_configurations(max_index_size)) {
    if (eval(c, spec_.init)) {
      if (eval(c, spec_.unsafe)) return true;
      std::string k = c.key() + c.str();
      if (visited.insert(k).second) frontier.push_back(c);
    }
  }
  for (int d = 0; d < depth && !frontier.empty(); ++d) {
    std::vector<Configuration> next;
    for (const auto& c : frontier) {
      for (const auto& t : spec_.transitions) {
        for (const auto& s : step(c, t)) {
          if (eval(s, spec_.unsafe)) return true;
          std::string k = s.key() + s.str();
          if (visited.insert(k).second) next.push_back(s);
        }
      }
    }
    frontier = std::move(next);
  }
  return false;
}

Configuration Oracle::restrict(const Configuration& c, const std::vector<int>& keep) {
  Configuration r;
  r.size = static_cast<int>(keep.size());
  std::map<int, int> remap;
  for (size_t i = 0; i < keep.size(); ++i) remap[keep[i]] = static_cast<int>(i);
  r.structure.size = r.size;
  r.structure.succ.assign(r.size, -1);
  for (size_t i = 0; i < keep.size(); ++i) {
    int t = c.structure.succ[keep[i]];
    if (t >= 0 && remap.count(t)) r.structure.succ[i] = remap[t];
  }
  for (const auto& [n, p] : c.structure.consts) {
    auto it = remap.find(p);
    if (it != remap.end()) r.structure.consts[n] = it->second;
  }
  for (const auto& [arr, vals] : c.vals) {
    auto& rv = r.vals[arr];
    for (int p : keep) rv.push_back(vals[p]);
  }
  return r;
}

}  // namespace arraymc
