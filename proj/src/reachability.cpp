#include "arraymc/reachability.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>

namespace arraymc {

namespace {

// Replace reads of updated arrays (which refer to the post-state) by the
// corresponding case-function applications over the pre-state.
Term replace_post_reads_term(const Term& t, const TransitionRule& tr) {
  switch (t.kind()) {
    case TermKind::ArrayRead: {
      Term ix = replace_post_reads_term(t.index_arg(), tr);
      auto it = tr.updates.find(t.name());
      if (it != tr.updates.end()) return Term::case_app(it->second, ix);
      if (ix == t.index_arg()) return t;
      return Term::array_read(t.name(), t.elem_sort(), ix);
    }
    default:
      return t;
  }
}

Formula replace_post_reads(const Formula& f, const TransitionRule& tr) {
  switch (f.kind()) {
    case Formula::Kind::True:
    case Formula::Kind::False:
      return f;
    case Formula::Kind::Lit: {
      Literal l = f.literal();
      for (auto& a : l.atom.args) a = replace_post_reads_term(a, tr);
      if (l.atom.kind == AtomKind::Eq) l.atom = Atom::eq(l.atom.args[0], l.atom.args[1]);
      return Formula::lit(l);
    }
    default: {
      std::vector<Formula> ks;
      for (const auto& k : f.kids()) ks.push_back(replace_post_reads(k, tr));
      if (f.kind() == Formula::Kind::Not) return Formula::mk_not(ks[0]);
      return f.kind() == Formula::Kind::And ? Formula::mk_and(std::move(ks))
                                            : Formula::mk_or(std::move(ks));
    }
  }
}

}  // namespace

ExistsI preimage(const SystemSpec& spec, const TransitionRule& t, const Cube& k) {
  (void)spec;
  // rename the cube's variables away from the transition's
  std::map<std::string, Term> ren;
  std::vector<Term> kvars;
  for (const auto& v : k.vars) {
    Term f = fresh_index_var("k");
    ren.emplace(v.name(), f);
    kvars.push_back(f);
  }
  Formula post = k.matrix().substitute(ren);
  Formula shifted = replace_post_reads(post, t);
  Formula full = Formula::mk_and({t.guard, shifted});
  Formula elim = eliminate_case_functions(full);
  ExistsI out;
  out.vars = t.vars;
  out.vars.insert(out.vars.end(), kvars.begin(), kvars.end());
  out.matrix = elim;
  return out;
}

std::vector<Cube> BreachEngine::retained(int exclude_node, bool exclude_descendants) const {
  std::vector<Cube> out;
  for (const auto& e : b_) {
    if (e.deleted) continue;
    if (exclude_node >= 0 && e.node_id == exclude_node) continue;
    if (exclude_descendants && e.node_id >= 0 && exclude_node >= 0 &&
        is_descendant(e.node_id, exclude_node))
      continue;
    out.push_back(e.cube);
  }
  return out;
}

bool BreachEngine::is_descendant(int node, int ancestor) const {
  int cur = node;
  while (cur >= 0) {
    if (cur == ancestor) return node != ancestor;
    cur = nodes_[cur].parent;
  }
  return false;
}

std::vector<int> BreachEngine::expand(int node_id, const BreachCallbacks& cb) {
  std::vector<int> children;
  Cube cube = nodes_[node_id].cube;
  int depth = nodes_[node_id].depth;
  for (const auto& t : spec_.transitions) {
    ExistsI pre = preimage(spec_, t, cube);
    if (cb.on_preimage) cb.on_preimage(t, cube, pre);
    auto cubes = to_primitive_differentiated(
        pre, [this](const Cube& c) { return engine_.check_cube_sat(c); });
    for (auto& c : cubes) {
      TableauNode n;
      n.id = static_cast<int>(nodes_.size());
      n.depth = depth + 1;
      n.cube = std::move(c);
      n.parent = node_id;
      n.via = t.name;
      children.push_back(n.id);
      nodes_.push_back(std::move(n));
    }
  }
  nodes_[node_id].status = NodeStatus::Expanded;
  return children;
}

int BreachEngine::subsume_sweep() {
  swept_upto_ = 0;
  return sweep_incremental();
}

// Screen retained nodes with a cheap single-prior subsumption test before the
// authoritative check; only pairs involving cubes retained since the previous
// sweep need another look.
int BreachEngine::sweep_incremental() {
  int deleted = 0;
  size_t from = swept_upto_;
  for (size_t i = 0; i < b_.size(); ++i) {
    auto& e = b_[i];
    if (e.deleted || e.node_id < 0) continue;
    std::vector<Cube> screen;
    size_t lo = i >= from ? 0 : from;
    for (size_t j = lo; j < b_.size(); ++j) {
      const auto& o = b_[j];
      if (o.deleted || j == i) continue;
      if (o.node_id >= 0 && (o.node_id == e.node_id || is_descendant(o.node_id, e.node_id)))
        continue;
      screen.push_back(o.cube);
    }
    if (screen.empty() || !engine_.subsumes_any(screen, e.cube)) continue;
    std::vector<Cube> others = retained(e.node_id, true);
    if (others.empty()) continue;
    if (engine_.check_fixpoint(e.cube, others)) {
      e.deleted = true;
      nodes_[e.node_id].status = NodeStatus::DeletedSubsumed;
      deleted++;
    }
  }
  swept_upto_ = b_.size();
  return deleted;
}

ReachResult BreachEngine::run(const ExistsI& u, const Budget& budget, const BreachCallbacks& cb) {
  auto t0 = std::chrono::steady_clock::now();
  long smt0 = engine_.stats().total();
  ReachResult res;
  auto finish = [&](ReachResult::Verdict v) {
    res.verdict = v;
    res.stats.smt = engine_.stats().total() - smt0;
    res.stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v == ReachResult::Verdict::Safe) res.fixpoint = retained();
    return res;
  };

  if (budget.max_depth <= 0 || budget.max_nodes <= 0)
    throw std::invalid_argument("budgets must be positive");

  nodes_.clear();
  b_.clear();

  auto roots = to_primitive_differentiated(
      u, [this](const Cube& c) { return engine_.check_cube_sat(c); });
  for (auto& c : roots) {
    TableauNode n;
    n.id = static_cast<int>(nodes_.size());
    n.depth = 0;
    n.cube = std::move(c);
    nodes_.push_back(std::move(n));
  }

  for (int depth = 0;; ++depth) {
    std::vector<int> level;
    for (const auto& n : nodes_)
      if (n.status == NodeStatus::Open && n.depth == depth) level.push_back(n.id);
    if (level.empty()) return finish(ReachResult::Verdict::Safe);
    if (depth >= budget.max_depth) return finish(ReachResult::Verdict::BudgetExceeded);

    if (cb.level_hook) {
      std::vector<const TableauNode*> open;
      for (int id : level) open.push_back(&nodes_[id]);
      for (auto& c : cb.level_hook(depth, open)) b_.push_back(BEntry{std::move(c), -1});
    }

    for (int id : level) {
      // NotAppl: unsatisfiable cubes close their branch
      if (!engine_.check_cube_sat(nodes_[id].cube)) {
        nodes_[id].status = NodeStatus::ClosedUnsat;
        continue;
      }
      // FixPoint against the accumulated set
      if (engine_.check_fixpoint(nodes_[id].cube, retained())) {
        nodes_[id].status = NodeStatus::ClosedFixpoint;
        continue;
      }
      // Safety
      if (engine_.check_safety(spec_.init, nodes_[id].cube)) {
        nodes_[id].status = NodeStatus::UnsafeHit;
        std::vector<std::string> trace;
        for (int cur = id; cur >= 0; cur = nodes_[cur].parent)
          if (!nodes_[cur].via.empty()) trace.push_back(nodes_[cur].via);
        res.trace = std::move(trace);
        res.stats.nodes = std::count_if(nodes_.begin(), nodes_.end(), [](const TableauNode& n) {
          return n.status == NodeStatus::Expanded;
        });
        res.stats.depth = depth + 1;
        return finish(ReachResult::Verdict::Unsafe);
      }
      // PreImg + Beta
      b_.push_back(BEntry{nodes_[id].cube, id});
      expand(id, cb);
      res.stats.nodes++;
      res.stats.depth = std::max(res.stats.depth, depth + 1);
      if (static_cast<long>(nodes_.size()) > budget.max_nodes)
        return finish(ReachResult::Verdict::BudgetExceeded);
    }

    if (sweep_enabled_) res.stats.deleted += sweep_incremental();
  }
}

}  // namespace arraymc
