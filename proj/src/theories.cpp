#include "arraymc/theories.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>

namespace arraymc {

int IndexModel::cls_of(const Term& t) const {
  for (size_t i = 0; i < terms.size(); ++i)
    if (terms[i] == t) return cls[i];
  return -1;
}

std::string IndexTheory::name() const {
  switch (kind_) {
    case Kind::PureEquality: return "equality";
    case Kind::LinearOrder: return "linear-order";
    case Kind::SuccessorGraph: return origin_ ? "successor-origin" : "successor";
  }
  return "?";
}

std::vector<Term> IndexTheory::constants() const {
  if (kind_ == Kind::SuccessorGraph && origin_)
    return {Term::index_const("o"), Term::index_const("o1")};
  return {};
}

std::vector<Term> IndexTheory::representative_terms(const std::vector<Term>& vars) const {
  // relational / quasi-relational signatures: the variables themselves,
  // plus the theory constants when present
  std::vector<Term> out = vars;
  for (const auto& c : constants())
    if (std::find(out.begin(), out.end(), c) == std::end(out)) out.push_back(c);
  return out;
}

namespace {

struct UF {
  std::vector<int> p;
  explicit UF(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
  bool merge(int a, int b) {
    a = find(a); b = find(b);
    if (a == b) return false;
    p[b] = a;
    return true;
  }
};

struct TermIds {
  std::vector<Term> terms;
  std::map<Term, int> index;
  int id(const Term& t) {
    auto it = index.find(t);
    if (it != index.end()) return it->second;
    terms.push_back(t);
    index.emplace(t, static_cast<int>(terms.size()) - 1);
    return static_cast<int>(terms.size()) - 1;
  }
};

void check_index_literal(const IndexTheory& th, const Literal& l) {
  const Atom& a = l.atom;
  switch (a.kind) {
    case AtomKind::Eq:
      return;
    case AtomKind::Lt:
    case AtomKind::Le:
      if (th.kind() != IndexTheory::Kind::LinearOrder)
        throw std::invalid_argument("order atom outside the linear-order index theory");
      return;
    case AtomKind::IdxPred:
      if (th.kind() != IndexTheory::Kind::SuccessorGraph || a.pred != "S")
        throw std::invalid_argument("unknown index relation " + a.pred);
      return;
  }
}

bool solve_equality(const std::vector<Literal>& lits, TermIds& ids, UF& uf) {
  for (const auto& l : lits)
    if (l.pos && l.atom.kind == AtomKind::Eq)
      uf.merge(ids.id(l.atom.args[0]), ids.id(l.atom.args[1]));
  for (const auto& l : lits)
    if (!l.pos && l.atom.kind == AtomKind::Eq)
      if (uf.find(ids.id(l.atom.args[0])) == uf.find(ids.id(l.atom.args[1]))) return false;
  return true;
}

// Strongly connected components over strict/weak order edges. A cycle through
// a strict edge, or a disequation inside one component, is a contradiction.
struct OrderGraph {
  int n;
  std::vector<std::vector<std::pair<int, bool>>> adj;  // (target, strict)
  explicit OrderGraph(int n_) : n(n_), adj(n_) {}
  void edge(int a, int b, bool strict) { adj[a].push_back({b, strict}); }

  bool solve(const std::vector<std::pair<int, int>>& ne_pairs, std::vector<int>* rank_out) {
    std::vector<int> comp(n, -1), low(n), idx(n, -1), stk;
    int counter = 0, ncomp = 0;
    std::function<void(int)> dfs = [&](int v) {
      idx[v] = low[v] = counter++;
      stk.push_back(v);
      for (auto [w, s] : adj[v]) {
        (void)s;
        if (idx[w] < 0) { dfs(w); low[v] = std::min(low[v], low[w]); }
        else if (comp[w] < 0) low[v] = std::min(low[v], idx[w]);
      }
      if (low[v] == idx[v]) {
        while (true) {
          int w = stk.back(); stk.pop_back();
          comp[w] = ncomp;
          if (w == v) break;
        }
        ncomp++;
      }
    };
    for (int v = 0; v < n; ++v)
      if (idx[v] < 0) dfs(v);
    for (int v = 0; v < n; ++v)
      for (auto [w, s] : adj[v])
        if (s && comp[v] == comp[w]) return false;
    for (auto [a, b] : ne_pairs)
      if (comp[a] == comp[b]) return false;
    if (rank_out) {
      // components are numbered in reverse topological order by Tarjan
      std::vector<int> rank(n);
      for (int v = 0; v < n; ++v) rank[v] = ncomp - 1 - comp[v];
      *rank_out = rank;
    }
    return true;
  }
};

}  // namespace

bool IndexTheory::solve(const std::vector<Literal>& lits, IndexModel* model) const {
  for (const auto& l : lits) check_index_literal(*this, l);
  TermIds ids;
  for (const auto& c : constants()) ids.id(c);
  for (const auto& l : lits)
    for (const auto& a : l.atom.args) ids.id(a);
  int n = static_cast<int>(ids.terms.size());
  if (n == 0) {
    if (model) *model = IndexModel{};
    return true;
  }
  UF uf(n);
  if (!solve_equality(lits, ids, uf)) return false;

  auto finish_model = [&](const std::vector<int>& rank, const std::vector<int>& succ) {
    if (!model) return;
    model->terms = ids.terms;
    model->cls.resize(n);
    std::map<int, int> remap;
    for (int i = 0; i < n; ++i) {
      int r = uf.find(i);
      if (!remap.count(r)) remap[r] = static_cast<int>(remap.size());
      model->cls[i] = remap[r];
    }
    model->n_classes = static_cast<int>(remap.size());
    model->rank.assign(model->n_classes, 0);
    model->succ.assign(model->n_classes, -1);
    for (int i = 0; i < n; ++i) {
      int r = uf.find(i);
      if (!rank.empty()) model->rank[remap[r]] = rank[r];
      if (!succ.empty() && succ[r] >= 0) model->succ[remap[r]] = remap[uf.find(succ[r])];
    }
  };

  switch (kind_) {
    case Kind::PureEquality: {
      finish_model({}, {});
      return true;
    }
    case Kind::LinearOrder: {
      OrderGraph g(n);
      std::vector<std::pair<int, int>> ne;
      for (const auto& l : lits) {
        int a = uf.find(ids.id(l.atom.args[0]));
        int b = uf.find(ids.id(l.atom.args[1]));
        switch (l.atom.kind) {
          case AtomKind::Eq:
            if (!l.pos) ne.push_back({a, b});
            break;
          case AtomKind::Lt:
            if (l.pos) g.edge(a, b, true); else g.edge(b, a, false);
            break;
          case AtomKind::Le:
            if (l.pos) g.edge(a, b, false); else g.edge(b, a, true);
            break;
          default: break;
        }
      }
      // members of one equivalence class share a node via find(); nothing more needed
      std::vector<int> rank;
      if (!g.solve(ne, &rank)) return false;
      finish_model(rank, {});
      return true;
    }
    case Kind::SuccessorGraph: {
      // propagate functionality/injectivity merges to a fixpoint
      bool changed = true;
      auto pos_edges = [&]() {
        std::vector<std::pair<int, int>> es;
        for (const auto& l : lits)
          if (l.pos && l.atom.kind == AtomKind::IdxPred)
            es.push_back({uf.find(ids.id(l.atom.args[0])), uf.find(ids.id(l.atom.args[1]))});
        if (origin_) {
          es.push_back({uf.find(ids.id(Term::index_const("o"))),
                        uf.find(ids.id(Term::index_const("o1")))});
        }
        return es;
      };
      while (changed) {
        changed = false;
        auto es = pos_edges();
        for (size_t i = 0; i < es.size(); ++i)
          for (size_t j = i + 1; j < es.size(); ++j) {
            if (es[i].first == es[j].first && es[i].second != es[j].second)
              changed |= uf.merge(es[i].second, es[j].second);
            if (es[i].second == es[j].second && es[i].first != es[j].first)
              changed |= uf.merge(es[i].first, es[j].first);
          }
      }
      // disequations
      for (const auto& l : lits)
        if (!l.pos && l.atom.kind == AtomKind::Eq)
          if (uf.find(ids.id(l.atom.args[0])) == uf.find(ids.id(l.atom.args[1]))) return false;
      auto es = pos_edges();
      std::sort(es.begin(), es.end());
      es.erase(std::unique(es.begin(), es.end()), es.end());
      // negated edges must not be present positively
      for (const auto& l : lits)
        if (!l.pos && l.atom.kind == AtomKind::IdxPred) {
          std::pair<int, int> e{uf.find(ids.id(l.atom.args[0])), uf.find(ids.id(l.atom.args[1]))};
          if (std::find(es.begin(), es.end(), e) != es.end()) return false;
        }
      std::vector<int> succ(n, -1);
      for (auto [a, b] : es) succ[a] = b;
      if (origin_) {
        int o = uf.find(ids.id(Term::index_const("o")));
        for (auto [a, b] : es) {
          (void)a;
          if (b == o) return false;  // o has no predecessor
        }
      }
      if (acyclic()) {
        for (int s = 0; s < n; ++s) {
          if (uf.find(s) != s) continue;
          int slow = s, steps = 0;
          int cur = s;
          (void)slow;
          while (cur >= 0 && steps <= n) { cur = succ[cur] >= 0 ? uf.find(succ[cur]) : -1; steps++; }
          if (steps > n) return false;  // cycle
        }
        for (int s = 0; s < n; ++s)
          if (uf.find(s) == s && succ[s] == s) return false;
      }
      finish_model({}, succ);
      return true;
    }
  }
  return false;
}

bool IndexTheory::entails(const std::vector<Literal>& ctx, const Literal& l) const {
  for (const auto& conj : negate_to_dnf(Formula::lit(l))) {
    std::vector<Literal> q = ctx;
    q.insert(q.end(), conj.begin(), conj.end());
    if (solve(q)) return false;
  }
  return true;
}

bool IndexTheory::refutes(const std::vector<Literal>& ctx, const Literal& l) const {
  std::vector<Literal> q = ctx;
  q.push_back(l);
  return !solve(q);
}

bool IndexTheory::is_model(const Structure& s) const {
  switch (kind_) {
    case Kind::PureEquality:
    case Kind::LinearOrder:
      return true;
    case Kind::SuccessorGraph: {
      // functional is built into the representation; check injectivity
      std::vector<int> indeg(s.size, 0);
      for (int i = 0; i < s.size; ++i)
        if (s.succ[i] >= 0 && ++indeg[s.succ[i]] > 1) return false;
      if (acyclic()) {
        for (int i = 0; i < s.size; ++i) {
          int cur = i, steps = 0;
          while (cur >= 0 && steps <= s.size) { cur = s.succ[cur]; steps++; }
          if (steps > s.size) return false;
        }
      }
      if (origin_) {
        auto oi = s.consts.find("o");
        auto o1i = s.consts.find("o1");
        if (oi == s.consts.end() || o1i == s.consts.end()) return false;
        if (s.succ[oi->second] != o1i->second) return false;
        for (int i = 0; i < s.size; ++i)
          if (s.succ[i] == oi->second) return false;
      }
      return true;
    }
  }
  return false;
}

std::vector<IndexTheory::Structure> IndexTheory::enumerate_structures(int size) const {
  std::vector<Structure> out;
  if (size <= 0) return out;
  if (!oracle_enumerable())
    throw std::runtime_error("index theory " + name() + " does not support oracle enumeration");
  switch (kind_) {
    case Kind::PureEquality:
    case Kind::LinearOrder: {
      Structure s;
      s.size = size;
      s.succ.assign(size, -1);
      out.push_back(s);
      return out;
    }
    case Kind::SuccessorGraph: {
      // all functional-injective-acyclic edge sets: succ[i] in {-1,0..n-1}
      std::vector<int> succ(size, -1);
      std::function<void(int)> rec = [&](int i) {
        if (i == size) {
          Structure s;
          s.size = size;
          s.succ = succ;
          if (is_model(s)) out.push_back(s);
          return;
        }
        for (int v = -1; v < size; ++v) {
          succ[i] = v;
          rec(i + 1);
        }
        succ[i] = -1;
      };
      rec(0);
      return out;
    }
  }
  return out;
}

// --- element theories ---------------------------------------------------------

ElemTheory ElemTheory::enumerated(std::string sort, std::vector<std::string> members) {
  ElemTheory t;
  t.kind_ = Kind::Enumerated;
  t.sort_ = std::move(sort);
  t.members_ = std::move(members);
  return t;
}
ElemTheory ElemTheory::rational(std::string sort) {
  ElemTheory t;
  t.kind_ = Kind::Rational;
  t.sort_ = std::move(sort);
  return t;
}
ElemTheory ElemTheory::boolean(std::string sort) {
  ElemTheory t;
  t.kind_ = Kind::Boolean;
  t.sort_ = std::move(sort);
  t.members_ = {"tt", "ff"};
  return t;
}

Term ElemTheory::const_term(const std::string& member) const {
  if (kind_ == Kind::Rational) throw std::logic_error("rational theory has no named members");
  if (std::find(members_.begin(), members_.end(), member) == members_.end())
    throw std::invalid_argument("unknown constant " + member + " of sort " + sort_);
  return Term::elem_const(member, sort_);
}

namespace {

bool is_elem_var(const Term& t) { return t.kind() == TermKind::ElemVar; }
bool is_elem_const(const Term& t) { return t.kind() == TermKind::ElemConst; }

// ---- enumerated / boolean: backtracking over the finite domain ----

// Equality logic over a finite domain: merge equalities, propagate pinned
// constants, then color the residual disequality graph over the classes.
bool enum_solve(const std::vector<std::string>& domain, const std::vector<Literal>& lits,
                std::map<std::string, ElemValue>* model) {
  std::vector<Term> terms;
  std::map<Term, int> ids;
  auto id = [&](const Term& t) {
    auto it = ids.find(t);
    if (it != ids.end()) return it->second;
    terms.push_back(t);
    ids.emplace(t, static_cast<int>(terms.size()) - 1);
    return static_cast<int>(terms.size()) - 1;
  };
  for (const auto& l : lits) {
    if (l.atom.kind != AtomKind::Eq)
      throw std::invalid_argument("non-equality atom on enumerated sort");
    id(l.atom.args[0]);
    id(l.atom.args[1]);
  }
  int n = static_cast<int>(terms.size());
  UF uf(n);
  for (const auto& l : lits)
    if (l.pos) uf.merge(id(l.atom.args[0]), id(l.atom.args[1]));
  // pinned value per class
  std::map<int, std::string> pin;
  for (int i = 0; i < n; ++i) {
    if (!is_elem_const(terms[i])) continue;
    int r = uf.find(i);
    auto it = pin.find(r);
    if (it != pin.end() && it->second != terms[i].name()) return false;
    pin.emplace(r, terms[i].name());
  }
  // disequality edges between classes
  std::vector<std::pair<int, int>> ne;
  for (const auto& l : lits) {
    if (l.pos) continue;
    int a = uf.find(id(l.atom.args[0]));
    int b = uf.find(id(l.atom.args[1]));
    if (a == b) return false;
    auto pa = pin.find(a);
    auto pb = pin.find(b);
    if (pa != pin.end() && pb != pin.end()) {
      if (pa->second == pb->second) return false;
      continue;  // both pinned, distinct: satisfied
    }
    ne.push_back({a, b});
  }
  // candidate domains of the unpinned classes touched by disequalities
  std::map<int, std::set<std::string>> dom;
  auto ensure = [&](int c) {
    if (pin.count(c) || dom.count(c)) return;
    dom[c] = std::set<std::string>(domain.begin(), domain.end());
  };
  for (auto [a, b] : ne) {
    ensure(a);
    ensure(b);
    if (pin.count(a)) dom[b].erase(pin.at(a));
    if (pin.count(b)) dom[a].erase(pin.at(b));
  }
  std::vector<std::pair<int, int>> open_ne;  // both ends unpinned
  for (auto [a, b] : ne)
    if (!pin.count(a) && !pin.count(b)) open_ne.push_back({a, b});
  std::vector<int> open;
  for (auto& [c, d] : dom) {
    if (d.empty()) return false;
    open.push_back(c);
  }
  std::map<int, std::string> chosen;
  std::function<bool(size_t)> color = [&](size_t k) -> bool {
    if (k == open.size()) return true;
    int c = open[k];
    for (const auto& v : dom[c]) {
      bool ok = true;
      for (auto [a, b] : open_ne) {
        int other = a == c ? b : (b == c ? a : -1);
        if (other < 0) continue;
        auto it = chosen.find(other);
        if (it != chosen.end() && it->second == v) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      chosen[c] = v;
      if (color(k + 1)) return true;
      chosen.erase(c);
    }
    return false;
  };
  if (!color(0)) return false;
  if (model) {
    for (int i = 0; i < n; ++i) {
      if (!is_elem_var(terms[i])) continue;
      int r = uf.find(i);
      std::string v;
      if (pin.count(r)) v = pin.at(r);
      else if (chosen.count(r)) v = chosen.at(r);
      else v = domain.front();
      (*model)[terms[i].name()] = ElemValue::of_sym(v);
    }
  }
  return true;
}

// ---- rationals: Fourier-Motzkin over order literals ----

struct Bound {
  Term t;
  bool strict;
};

Rational eval_rat(const Term& t, std::map<std::string, ElemValue>& asg) {
  if (is_elem_const(t)) return *t.numeral();
  auto it = asg.find(t.name());
  if (it == asg.end())  // otherwise-unconstrained variable
    it = asg.emplace(t.name(), ElemValue::of_rat(Rational(0))).first;
  return it->second.rat;
}

// Decide a conjunction of <, <=, =, != literals over rational variables and
// numerals by order-graph analysis: weak cycles force equality, a strict edge
// or a disequation inside a forced class is a contradiction, and density
// makes every remaining system satisfiable.
bool rat_solve(const std::vector<Literal>& lits_in, std::map<std::string, ElemValue>* model) {
  // collect terms
  std::vector<Term> terms;
  std::map<Term, int> ids;
  auto id = [&](const Term& t) {
    auto it = ids.find(t);
    if (it != ids.end()) return it->second;
    terms.push_back(t);
    ids.emplace(t, static_cast<int>(terms.size()) - 1);
    return static_cast<int>(terms.size()) - 1;
  };
  struct Edge {
    int a, b;
    bool strict;
  };
  std::vector<Edge> edges;
  std::vector<std::pair<int, int>> ne;
  for (const auto& l : lits_in) {
    int a = id(l.atom.args[0]);
    int b = id(l.atom.args[1]);
    switch (l.atom.kind) {
      case AtomKind::Eq:
        if (l.pos) {
          edges.push_back({a, b, false});
          edges.push_back({b, a, false});
        } else {
          ne.push_back({a, b});
        }
        break;
      case AtomKind::Lt:
        if (l.pos) edges.push_back({a, b, true});
        else edges.push_back({b, a, false});
        break;
      case AtomKind::Le:
        if (l.pos) edges.push_back({a, b, false});
        else edges.push_back({b, a, true});
        break;
      default:
        return false;
    }
  }
  // pin numerals against each other
  int n = static_cast<int>(terms.size());
  for (int i = 0; i < n; ++i) {
    if (!is_elem_const(terms[i])) continue;
    for (int j = i + 1; j < n; ++j) {
      if (!is_elem_const(terms[j])) continue;
      int c = terms[i].numeral()->cmp(*terms[j].numeral());
      if (c == 0) {
        edges.push_back({i, j, false});
        edges.push_back({j, i, false});
      } else if (c < 0) {
        edges.push_back({i, j, true});
      } else {
        edges.push_back({j, i, true});
      }
    }
  }
  // Tarjan SCC
  std::vector<std::vector<std::pair<int, bool>>> adj(n);
  for (const auto& e : edges) adj[e.a].push_back({e.b, e.strict});
  std::vector<int> comp(n, -1), low(n), idxv(n, -1), stk;
  int counter = 0, ncomp = 0;
  std::function<void(int)> dfs = [&](int v) {
    idxv[v] = low[v] = counter++;
    stk.push_back(v);
    for (auto [w, s] : adj[v]) {
      (void)s;
      if (idxv[w] < 0) {
        dfs(w);
        low[v] = std::min(low[v], low[w]);
      } else if (comp[w] < 0) {
        low[v] = std::min(low[v], idxv[w]);
      }
    }
    if (low[v] == idxv[v]) {
      while (true) {
        int w = stk.back();
        stk.pop_back();
        comp[w] = ncomp;
        if (w == v) break;
      }
      ncomp++;
    }
  };
  for (int v = 0; v < n; ++v)
    if (idxv[v] < 0) dfs(v);
  for (const auto& e : edges)
    if (e.strict && comp[e.a] == comp[e.b]) return false;
  for (auto [a, b] : ne)
    if (comp[a] == comp[b]) return false;
  if (!model) return true;

  // witness: process components in topological order (Tarjan numbers sinks
  // first); pinned components carry their numeral, the rest take midpoints
  // below the least pinned value reachable forward
  std::vector<bool> pinned(ncomp, false);
  std::vector<Rational> pin(ncomp);
  for (int v = 0; v < n; ++v) {
    if (is_elem_const(terms[v])) {
      pinned[comp[v]] = true;
      pin[comp[v]] = *terms[v].numeral();
    }
  }
  // upper bound per component: least pinned value among forward-reachable
  std::vector<bool> has_ub(ncomp, false);
  std::vector<Rational> ub(ncomp);
  // components in topological order are ncomp-1, ncomp-2, ..., 0 (sources last)
  std::vector<std::vector<int>> cadj(ncomp);
  for (const auto& e : edges)
    if (comp[e.a] != comp[e.b]) cadj[comp[e.a]].push_back(comp[e.b]);
  for (int c = 0; c < ncomp; ++c) {  // sinks first = increasing component id? Tarjan: sinks get low ids
    if (pinned[c]) {
      has_ub[c] = true;
      ub[c] = pin[c];
    }
    for (int d : cadj[c]) {
      if (has_ub[d] && (!has_ub[c] || ub[d] < ub[c])) {
        has_ub[c] = true;
        ub[c] = ub[d];
      }
    }
  }
  std::vector<bool> assigned(ncomp, false);
  std::vector<Rational> val(ncomp);
  for (int c = 0; c < ncomp; ++c) {
    if (pinned[c]) {
      val[c] = pin[c];
      assigned[c] = true;
    }
  }
  // process in reverse component id = topological order sources→sinks
  std::vector<std::vector<int>> cpred(ncomp);
  for (const auto& e : edges)
    if (comp[e.a] != comp[e.b]) cpred[comp[e.b]].push_back(comp[e.a]);
  for (int c = ncomp - 1; c >= 0; --c) {
    if (pinned[c]) continue;
    bool has_lo = false;
    Rational lo;
    for (int p : cpred[c]) {
      if (!assigned[p]) continue;
      if (!has_lo || lo < val[p]) {
        has_lo = true;
        lo = val[p];
      }
    }
    Rational v;
    if (has_lo && has_ub[c]) v = Rational::midpoint(lo, ub[c]);
    else if (has_lo) v = lo.plus_one();
    else if (has_ub[c]) v = ub[c].minus_one();
    else v = Rational(0);
    // keep distinct components at distinct values (density allows it)
    auto taken = [&](const Rational& q) {
      for (int d = 0; d < ncomp; ++d)
        if (assigned[d] && val[d] == q) return true;
      return false;
    };
    while (taken(v)) {
      if (has_ub[c]) v = Rational::midpoint(v, ub[c]);
      else v = v.plus_one();
    }
    val[c] = v;
    assigned[c] = true;
  }
  for (int v = 0; v < n; ++v)
    if (is_elem_var(terms[v])) (*model)[terms[v].name()] = ElemValue::of_rat(val[comp[v]]);
  return true;
}

// The Fourier-Motzkin route (disequations split into the two strict cases):
// retained as the reference decision used by the quantifier-elimination tests.
bool rat_solve_fm(std::vector<Literal> lits, std::map<std::string, ElemValue>* model) {
  // rewrite negative order literals
  for (auto& l : lits) {
    if (l.pos) continue;
    if (l.atom.kind == AtomKind::Lt) l = Literal{Atom::le(l.atom.args[1], l.atom.args[0]), true};
    else if (l.atom.kind == AtomKind::Le) l = Literal{Atom::lt(l.atom.args[1], l.atom.args[0]), true};
  }
  // split a disequation
  for (size_t i = 0; i < lits.size(); ++i) {
    const Literal& l = lits[i];
    if (!l.pos && l.atom.kind == AtomKind::Eq) {
      Term a = l.atom.args[0], b = l.atom.args[1];
      if (is_elem_const(a) && is_elem_const(b)) {
        if (*a.numeral() == *b.numeral()) return false;
        lits.erase(lits.begin() + i);
        return rat_solve_fm(std::move(lits), model);
      }
      std::vector<Literal> lt = lits, gt = lits;
      lt[i] = Literal{Atom::lt(a, b), true};
      gt[i] = Literal{Atom::lt(b, a), true};
      if (rat_solve(std::move(lt), model)) return true;
      return rat_solve_fm(std::move(gt), model);
    }
  }
  // substitute an equality with a variable side
  for (size_t i = 0; i < lits.size(); ++i) {
    const Literal& l = lits[i];
    if (!(l.pos && l.atom.kind == AtomKind::Eq)) continue;
    Term a = l.atom.args[0], b = l.atom.args[1];
    if (a == b) {
      lits.erase(lits.begin() + i);
      return rat_solve_fm(std::move(lits), model);
    }
    if (is_elem_const(a) && is_elem_const(b)) return *a.numeral() == *b.numeral();
    Term var = is_elem_var(a) ? a : b;
    Term rep = is_elem_var(a) ? b : a;
    std::map<std::string, Term> m{{var.name(), rep}};
    std::vector<Literal> rest;
    for (size_t j = 0; j < lits.size(); ++j) {
      if (j == i) continue;
      Literal q = lits[j];
      for (auto& arg : q.atom.args) arg = arg.substitute(m);
      if (q.atom.kind == AtomKind::Eq) q.atom = Atom::eq(q.atom.args[0], q.atom.args[1]);
      rest.push_back(q);
    }
    if (!rat_solve(std::move(rest), model)) return false;
    if (model) (*model)[var.name()] = ElemValue::of_rat(eval_rat(rep, *model));
    return true;
  }
  // pick a variable to eliminate
  Term var;
  for (const auto& l : lits)
    for (const auto& a : l.atom.args)
      if (is_elem_var(a)) { var = a; break; }
  if (!var.valid()) {
    // ground: evaluate numeral comparisons
    for (const auto& l : lits) {
      Rational a = *l.atom.args[0].numeral();
      Rational b = *l.atom.args[1].numeral();
      bool ok = l.atom.kind == AtomKind::Lt ? a < b
              : l.atom.kind == AtomKind::Le ? a <= b
                                            : a == b;
      if (ok != l.pos) return false;
    }
    return true;
  }
  std::vector<Bound> lowers, uppers;
  std::vector<Literal> rest;
  for (const auto& l : lits) {
    const Term& a = l.atom.args[0];
    const Term& b = l.atom.args[1];
    bool strict = l.atom.kind == AtomKind::Lt;
    if (a == var && b == var) {
      if (strict) return false;
      continue;
    }
    if (b == var) lowers.push_back({a, strict});
    else if (a == var) uppers.push_back({b, strict});
    else rest.push_back(l);
  }
  for (const auto& lo : lowers)
    for (const auto& up : uppers) {
      bool strict = lo.strict || up.strict;
      rest.push_back(Literal{strict ? Atom::lt(lo.t, up.t) : Atom::le(lo.t, up.t), true});
    }
  if (!rat_solve(std::move(rest), model)) return false;
  if (model) {
    // back-substitute a witness value inside the (possibly open) interval
    bool has_lo = false, has_hi = false;
    Rational lo, hi;
    for (const auto& b : lowers) {
      Rational v = eval_rat(b.t, *model);
      if (!has_lo || lo < v) { lo = v; has_lo = true; }
    }
    for (const auto& b : uppers) {
      Rational v = eval_rat(b.t, *model);
      if (!has_hi || v < hi) { hi = v; has_hi = true; }
    }
    Rational v;
    if (has_lo && has_hi) v = Rational::midpoint(lo, hi);
    else if (has_lo) v = lo.plus_one();
    else if (has_hi) v = hi.minus_one();
    else v = Rational(0);
    // weak bounds admit the endpoint itself; midpoint handles equality cases
    (*model)[var.name()] = ElemValue::of_rat(v);
  }
  return true;
}

Formula simplify_ground(const Literal& l) {
  const Term& a = l.atom.args[0];
  const Term& b = l.atom.args[1];
  if (!is_elem_const(a) || !is_elem_const(b)) return Formula::lit(l);
  bool truth;
  if (a.numeral() && b.numeral()) {
    const Rational& x = *a.numeral();
    const Rational& y = *b.numeral();
    truth = l.atom.kind == AtomKind::Lt ? x < y : l.atom.kind == AtomKind::Le ? x <= y : x == y;
  } else {
    if (l.atom.kind != AtomKind::Eq) return Formula::lit(l);
    truth = a.name() == b.name();
  }
  if (truth != l.pos) return Formula::mk_false();
  return Formula::mk_true();
}

}  // namespace

bool ElemTheory::solve(const std::vector<Literal>& lits,
                       std::map<std::string, ElemValue>* model) const {
  for (const auto& l : lits) {
    for (const auto& a : l.atom.args) {
      if (a.is_index() || (a.elem_sort() != sort_))
        throw std::invalid_argument("literal outside element sort " + sort_);
      if (is_elem_const(a) && kind_ != Kind::Rational &&
          std::find(members_.begin(), members_.end(), a.name()) == members_.end())
        throw std::invalid_argument("unknown constant " + a.name() + " of sort " + sort_);
    }
    if (kind_ != Kind::Rational && l.atom.kind != AtomKind::Eq)
      throw std::invalid_argument("order atom on finite element sort " + sort_);
  }
  if (kind_ == Kind::Rational) return rat_solve(lits, model);
  return enum_solve(members_, lits, model);
}

bool ElemTheory::entails(const std::vector<Literal>& ctx, const Literal& l) const {
  for (const auto& conj : negate_to_dnf(Formula::lit(l))) {
    std::vector<Literal> q = ctx;
    q.insert(q.end(), conj.begin(), conj.end());
    if (solve(q)) return false;
  }
  return true;
}

bool ElemTheory::refutes(const std::vector<Literal>& ctx, const Literal& l) const {
  std::vector<Literal> q = ctx;
  q.push_back(l);
  return !solve(q);
}

Formula ElemTheory::eliminate(const std::vector<Term>& vars,
                              const std::vector<Literal>& conj) const {
  if (vars.empty()) {
    std::vector<Formula> fs;
    for (const auto& l : conj) fs.push_back(simplify_ground(l));
    return Formula::mk_and(std::move(fs));
  }
  Term v = vars.front();
  std::vector<Term> rest_vars(vars.begin() + 1, vars.end());

  auto recurse = [&](std::vector<Literal> ls) { return eliminate(rest_vars, ls); };

  // an equality pinning v lets us substitute
  for (size_t i = 0; i < conj.size(); ++i) {
    const Literal& l = conj[i];
    if (!(l.pos && l.atom.kind == AtomKind::Eq)) continue;
    const Term& a = l.atom.args[0];
    const Term& b = l.atom.args[1];
    if (a == v && b == v) {
      std::vector<Literal> rest(conj.begin(), conj.end());
      rest.erase(rest.begin() + i);
      std::vector<Term> again(vars);
      return eliminate(again, rest);
    }
    Term rep;
    if (a == v && b != v) rep = b;
    else if (b == v && a != v) rep = a;
    else continue;
    std::map<std::string, Term> m{{v.name(), rep}};
    std::vector<Literal> rest;
    for (size_t j = 0; j < conj.size(); ++j) {
      if (j == i) continue;
      Literal q = conj[j];
      for (auto& arg : q.atom.args) arg = arg.substitute(m);
      if (q.atom.kind == AtomKind::Eq) q.atom = Atom::eq(q.atom.args[0], q.atom.args[1]);
      rest.push_back(q);
    }
    return recurse(std::move(rest));
  }

  if (kind_ != Kind::Rational) {
    // expand over the finite domain
    std::vector<Formula> cases;
    for (const auto& c : members_) {
      std::map<std::string, Term> m{{v.name(), Term::elem_const(c, sort_)}};
      std::vector<Literal> inst;
      bool dead = false;
      for (const auto& l : conj) {
        Literal q = l;
        for (auto& arg : q.atom.args) arg = arg.substitute(m);
        if (q.atom.kind == AtomKind::Eq) q.atom = Atom::eq(q.atom.args[0], q.atom.args[1]);
        Formula s = simplify_ground(q);
        if (s.kind() == Formula::Kind::False) { dead = true; break; }
        if (s.kind() == Formula::Kind::Lit) inst.push_back(s.literal());
      }
      if (!dead) cases.push_back(recurse(std::move(inst)));
    }
    return Formula::mk_or(std::move(cases));
  }

  // rationals: normalize negatives, split disequations on v, then FM
  std::vector<Literal> lits = conj;
  for (auto& l : lits) {
    if (l.pos) continue;
    if (l.atom.kind == AtomKind::Lt) l = Literal{Atom::le(l.atom.args[1], l.atom.args[0]), true};
    else if (l.atom.kind == AtomKind::Le) l = Literal{Atom::lt(l.atom.args[1], l.atom.args[0]), true};
  }
  for (size_t i = 0; i < lits.size(); ++i) {
    const Literal& l = lits[i];
    if (!l.pos && l.atom.kind == AtomKind::Eq &&
        (l.atom.args[0] == v || l.atom.args[1] == v)) {
      Term a = l.atom.args[0], b = l.atom.args[1];
      std::vector<Literal> lt = lits, gt = lits;
      lt[i] = Literal{Atom::lt(a, b), true};
      gt[i] = Literal{Atom::lt(b, a), true};
      std::vector<Term> again(vars);
      return Formula::mk_or({eliminate(again, lt), eliminate(again, gt)});
    }
  }
  std::vector<Bound> lowers, uppers;
  std::vector<Literal> rest;
  for (const auto& l : lits) {
    if (l.atom.kind == AtomKind::Eq || !l.pos) { rest.push_back(l); continue; }
    const Term& a = l.atom.args[0];
    const Term& b = l.atom.args[1];
    bool strict = l.atom.kind == AtomKind::Lt;
    if (a == v && b == v) {
      if (strict) return Formula::mk_false();
      continue;
    }
    if (b == v) lowers.push_back({a, strict});
    else if (a == v) uppers.push_back({b, strict});
    else rest.push_back(l);
  }
  for (const auto& lo : lowers)
    for (const auto& up : uppers) {
      bool strict = lo.strict || up.strict;
      rest.push_back(Literal{strict ? Atom::lt(lo.t, up.t) : Atom::le(lo.t, up.t), true});
    }
  return recurse(std::move(rest));
}

// --- arrangements ---------------------------------------------------------------

std::vector<Arrangement> enumerate_arrangements(const std::vector<Term>& vars) {
  std::vector<Arrangement> out;
  Arrangement cur;
  std::function<void(size_t)> rec = [&](size_t i) {
    if (i == vars.size()) {
      out.push_back(cur);
      return;
    }
    for (auto& b : cur.blocks) {
      b.push_back(vars[i]);
      rec(i + 1);
      b.pop_back();
    }
    cur.blocks.push_back({vars[i]});
    rec(i + 1);
    cur.blocks.pop_back();
  };
  rec(0);
  return out;
}

const ElemTheory& Signature::elem_theory(const std::string& sort) const {
  auto it = elems.find(sort);
  if (it == elems.end()) throw std::invalid_argument("unknown element sort " + sort);
  return *it->second;
}

const ArrayDecl* Signature::find_array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

const ElemTheory& Signature::array_theory(const std::string& array) const {
  const ArrayDecl* d = find_array(array);
  if (!d) throw std::invalid_argument("unknown array " + array);
  return elem_theory(d->elem_sort);
}

}  // namespace arraymc
