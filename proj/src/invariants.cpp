#include "arraymc/invariants.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>

namespace arraymc {

namespace {

bool is_index_lit(const Literal& l) { return l.atom.is_index_atom(); }

std::vector<Term> index_vars_of_lit(const Literal& l) {
  std::vector<Term> vs;
  for (const auto& a : l.atom.args) a.collect_vars(vs);
  std::vector<Term> out;
  for (const auto& v : vs)
    if (v.kind() == TermKind::IndexVar) out.push_back(v);
  return out;
}

bool vars_subset(const std::vector<Term>& vs, const std::vector<Term>& of) {
  for (const auto& v : vs)
    if (std::find(of.begin(), of.end(), v) == of.end()) return false;
  return true;
}

// Flatten a quantifier-free formula into a conjunction of literals, if it is one.
std::optional<std::vector<Literal>> as_literal_conj(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::True:
      return std::vector<Literal>{};
    case Formula::Kind::Lit:
      return std::vector<Literal>{f.literal()};
    case Formula::Kind::And: {
      std::vector<Literal> out;
      for (const auto& k : f.kids()) {
        auto sub = as_literal_conj(k);
        if (!sub) return std::nullopt;
        out.insert(out.end(), sub->begin(), sub->end());
      }
      return out;
    }
    default:
      return std::nullopt;
  }
}

// All Σ_I(ui)-atoms of the index theory over the given variables + constants.
std::vector<Atom> index_atoms_over(const Signature& sig, const std::vector<Term>& ui) {
  std::vector<Term> terms = ui;
  for (const auto& c : sig.index->constants()) terms.push_back(c);
  std::vector<Atom> atoms;
  for (size_t i = 0; i < terms.size(); ++i)
    for (size_t j = 0; j < terms.size(); ++j) {
      if (i < j) atoms.push_back(Atom::eq(terms[i], terms[j]));
      if (i == j && sig.index->kind() != IndexTheory::Kind::SuccessorGraph) continue;
      switch (sig.index->kind()) {
        case IndexTheory::Kind::LinearOrder:
          if (i != j) atoms.push_back(Atom::lt(terms[i], terms[j]));
          break;
        case IndexTheory::Kind::SuccessorGraph:
          atoms.push_back(Atom::idx_pred("S", {terms[i], terms[j]}));
          break;
        default:
          break;
      }
    }
  return atoms;
}

}  // namespace

Formula min_formula(const Signature& sig, const Cube& c) {
  std::vector<Term> reps = sig.index->representative_terms(c.vars);
  Formula phi = c.matrix();
  std::vector<Formula> parts{phi};
  // all substitutions of the cube's variables into representative terms
  size_t k = c.vars.size();
  if (k == 0 || reps.empty()) return phi;
  std::vector<size_t> pick(k, 0);
  while (true) {
    std::map<std::string, Term> sigma;
    for (size_t i = 0; i < k; ++i) sigma.emplace(c.vars[i].name(), reps[pick[i]]);
    Formula inst = phi.substitute(sigma);
    std::vector<Formula> names;
    for (const auto& v : c.vars) {
      std::vector<Formula> eqs;
      for (const auto& t : reps) {
        Term ts = t.substitute(sigma);
        eqs.push_back(Formula::lit(Atom::eq(ts, v)));
      }
      names.push_back(Formula::mk_or(std::move(eqs)));
    }
    parts.push_back(Formula::mk_or({Formula::mk_not(inst), Formula::mk_and(std::move(names))}));
    size_t i = 0;
    for (; i < k; ++i) {
      if (++pick[i] < reps.size()) break;
      pick[i] = 0;
    }
    if (i == k) break;
  }
  return Formula::mk_and(std::move(parts));
}

std::optional<Candidate> index_abstraction(const SystemSpec& spec, SmtEngine& engine,
                                           const Cube& c, const std::vector<Term>& ui) {
  if (!c.differentiated()) return std::nullopt;
  if (!engine.check_cube_sat(c)) return std::nullopt;
  std::vector<Term> uj;
  for (const auto& v : c.vars)
    if (std::find(ui.begin(), ui.end(), v) == ui.end()) uj.push_back(v);

  // δ_I: the Σ_I(ui)-literals of the cube
  std::vector<Literal> delta;
  for (const auto& l : c.lits)
    if (is_index_lit(l) && vars_subset(index_vars_of_lit(l), ui)) delta.push_back(l);

  // maximality: every Σ_I(ui)-atom syntactically present or decided modulo T_I
  for (const auto& atom : index_atoms_over(spec.sig, ui)) {
    bool present = false;
    for (const auto& l : delta)
      if (l.atom == atom) present = true;
    if (present) continue;
    Literal pos{atom, true};
    if (!spec.sig.index->entails(delta, pos) && !spec.sig.index->refutes(delta, pos))
      return std::nullopt;
  }

  // element side: rename reads at uj to fresh variables, then eliminate them
  std::map<std::string, std::vector<Literal>> by_sort;  // pending QE per sort
  std::map<std::string, std::vector<Term>> qe_vars;
  std::map<std::string, Term> read_sub;  // read string -> fresh var
  int fresh = 0;
  auto abstract_lit = [&](const Literal& l, bool& touched) {
    Literal out = l;
    for (auto& a : out.atom.args) {
      if (a.kind() == TermKind::ArrayRead) {
        bool at_uj = false;
        for (const auto& v : uj)
          if (a.index_arg() == v) at_uj = true;
        if (!at_uj) continue;
        std::string key = a.str();
        auto it = read_sub.find(key);
        if (it == read_sub.end()) {
          Term nv = Term::elem_var("d" + std::to_string(fresh++), a.elem_sort());
          it = read_sub.emplace(key, nv).first;
          qe_vars[a.elem_sort()].push_back(nv);
        }
        a = it->second;
        touched = true;
      }
    }
    if (out.atom.kind == AtomKind::Eq) out.atom = Atom::eq(out.atom.args[0], out.atom.args[1]);
    return out;
  };

  std::vector<Literal> kept;  // element literals over a[ui] only
  for (const auto& l : c.lits) {
    if (is_index_lit(l)) continue;
    bool touched = false;
    Literal al = abstract_lit(l, touched);
    if (touched) {
      std::string sort;
      for (const auto& a : al.atom.args)
        if (!a.is_index()) sort = a.elem_sort();
      by_sort[sort].push_back(al);
    } else {
      kept.push_back(al);
    }
  }

  std::vector<Literal> lits = delta;
  lits.insert(lits.end(), kept.begin(), kept.end());
  for (auto& [sort, pend] : by_sort) {
    Formula elim = spec.sig.elem_theory(sort).eliminate(qe_vars[sort], pend);
    auto conj = as_literal_conj(elim);
    if (!conj) return std::nullopt;  // non-conjunctive projection: skip this split
    lits.insert(lits.end(), conj->begin(), conj->end());
  }

  Cube out;
  out.vars = ui;
  out.lits = std::move(lits);
  std::sort(out.lits.begin(), out.lits.end());
  out.lits.erase(std::unique(out.lits.begin(), out.lits.end()), out.lits.end());

  Candidate cand;
  cand.cube = std::move(out);
  cand.origin = Candidate::Origin::IndexAbstraction;
  // minimal requirement: the source disjunct implies the candidate
  if (!engine.implies(c.as_exists(), cand.cube.as_exists())) return std::nullopt;
  return cand;
}

std::optional<Candidate> signature_abstraction(const SystemSpec& spec, SmtEngine& engine,
                                               const Cube& c,
                                               const std::set<std::string>& arrays) {
  for (const auto& a : arrays) {
    const ArrayDecl* d = spec.sig.find_array(a);
    if (!d) throw std::invalid_argument("unknown array " + a);
    if (!spec.sig.elem_theory(d->elem_sort).has_qe())
      throw std::runtime_error("element theory of " + a + " does not support elimination");
  }
  std::map<std::string, std::vector<Literal>> by_sort;
  std::map<std::string, std::vector<Term>> qe_vars;
  std::map<std::string, Term> read_sub;
  int fresh = 0;
  std::vector<Literal> lits;
  for (const auto& l : c.lits) {
    if (is_index_lit(l)) {
      lits.push_back(l);
      continue;
    }
    Literal out = l;
    bool touched = false;
    for (auto& a : out.atom.args) {
      if (a.kind() == TermKind::ArrayRead && arrays.count(a.name())) {
        std::string key = a.str();
        auto it = read_sub.find(key);
        if (it == read_sub.end()) {
          Term nv = Term::elem_var("d" + std::to_string(fresh++), a.elem_sort());
          it = read_sub.emplace(key, nv).first;
          qe_vars[a.elem_sort()].push_back(nv);
        }
        a = it->second;
        touched = true;
      }
    }
    if (out.atom.kind == AtomKind::Eq) out.atom = Atom::eq(out.atom.args[0], out.atom.args[1]);
    if (touched) {
      std::string sort;
      for (const auto& a : out.atom.args)
        if (!a.is_index()) sort = a.elem_sort();
      by_sort[sort].push_back(out);
    } else {
      lits.push_back(out);
    }
  }
  for (auto& [sort, pend] : by_sort) {
    Formula elim = spec.sig.elem_theory(sort).eliminate(qe_vars[sort], pend);
    auto conj = as_literal_conj(elim);
    if (!conj) return std::nullopt;
    lits.insert(lits.end(), conj->begin(), conj->end());
  }
  // drop index variables that now occur only in disequations
  std::vector<Term> vars;
  for (const auto& v : c.vars) {
    bool meaningful = false;
    for (const auto& l : lits) {
      std::vector<Term> vs = index_vars_of_lit(l);
      if (std::find(vs.begin(), vs.end(), v) == vs.end()) continue;
      bool is_ne = !l.pos && l.atom.kind == AtomKind::Eq;
      if (!is_ne) meaningful = true;
      // element literals reading a[v] also keep v
      if (!is_index_lit(l)) meaningful = true;
    }
    if (meaningful) vars.push_back(v);
  }
  std::vector<Literal> pruned;
  for (const auto& l : lits) {
    bool keep = true;
    for (const auto& v : index_vars_of_lit(l))
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) keep = false;
    if (keep) pruned.push_back(l);
  }
  Cube out;
  out.vars = std::move(vars);
  out.lits = std::move(pruned);
  std::sort(out.lits.begin(), out.lits.end());
  out.lits.erase(std::unique(out.lits.begin(), out.lits.end()), out.lits.end());
  Candidate cand;
  cand.cube = std::move(out);
  cand.origin = Candidate::Origin::SignatureAbstraction;
  if (!engine.implies(c.as_exists(), cand.cube.as_exists())) return std::nullopt;
  return cand;
}

std::vector<Candidate> choose(const SystemSpec& spec, SmtEngine& engine, const ExistsI& p,
                              const ChooseConfig& cfg) {
  std::vector<Candidate> out;
  auto cubes = to_primitive_differentiated(
      p, [&engine](const Cube& c) { return engine.check_cube_sat(c); });
  for (const auto& q : cubes) {
    std::vector<Candidate> local;
    if (cfg.strategy == AbsStrategy::Index || cfg.strategy == AbsStrategy::Both) {
      // proper splits with |ui| in {1, 2}
      size_t n = q.vars.size();
      for (size_t i = 0; i < n; ++i) {
        if (n > 1) {
          if (auto cand = index_abstraction(spec, engine, q, {q.vars[i]})) local.push_back(*cand);
        }
        for (size_t j = i + 1; j < n; ++j) {
          if (n > 2) {
            if (auto cand = index_abstraction(spec, engine, q, {q.vars[i], q.vars[j]}))
              local.push_back(*cand);
          }
        }
      }
    }
    if (cfg.strategy == AbsStrategy::Signature || cfg.strategy == AbsStrategy::Both) {
      std::vector<std::set<std::string>> sets;
      if (!cfg.sig_arrays.empty()) {
        sets.push_back(std::set<std::string>(cfg.sig_arrays.begin(), cfg.sig_arrays.end()));
      } else {
        for (const auto& a : spec.sig.arrays) sets.push_back({a.name});
      }
      for (const auto& s : sets)
        if (auto cand = signature_abstraction(spec, engine, q, s)) local.push_back(*cand);
    }
    for (auto& cand : local) {
      // discard candidates equal to their source (useless over-approximations)
      if (engine.implies(cand.cube.as_exists(), q.as_exists())) continue;
      bool dup = false;
      for (const auto& prev : out) {
        if (engine.implies(prev.cube.as_exists(), cand.cube.as_exists()) &&
            engine.implies(cand.cube.as_exists(), prev.cube.as_exists())) {
          dup = true;
          break;
        }
      }
      if (!dup) out.push_back(std::move(cand));
    }
  }
  return out;
}

std::optional<VerifiedInvariant> InvariantEngine::verify_candidate(const Candidate& cand,
                                                                   const Budget& budget) {
  std::string key = cand.cube.key();
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  BreachEngine sub(spec_, engine_);
  ReachResult r = sub.run(cand.cube.as_exists(), budget);
  std::optional<VerifiedInvariant> out;
  if (r.verdict == ReachResult::Verdict::Safe)
    out = VerifiedInvariant{std::move(r.fixpoint), cand};
  cache_.emplace(std::move(key), out);
  return out;
}

bool recheck_invariant(const SystemSpec& spec, SmtEngine& engine, const std::vector<Cube>& b) {
  for (const auto& cube : b)
    if (engine.check_safety(spec.init, cube)) return false;
  for (const auto& cube : b) {
    for (const auto& t : spec.transitions) {
      ExistsI pre = preimage(spec, t, cube);
      auto cubes = to_primitive_differentiated(
          pre, [&engine](const Cube& c) { return engine.check_cube_sat(c); });
      for (const auto& c : cubes)
        if (!engine.check_fixpoint(c, b)) return false;
    }
  }
  return true;
}

ReachResult breach_plus_inv(const SystemSpec& spec, SmtEngine& engine, const ExistsI& u,
                            const BreachInvOptions& opts, const BreachCallbacks& cb) {
  if (opts.inv.max_depth >= opts.main.max_depth || opts.inv.max_nodes >= opts.main.max_nodes)
    throw std::invalid_argument("invariant budget must be strictly below the main budget");
  InvariantEngine inv(spec, engine);
  int inv_count = 0;
  std::set<std::string> used;

  ChooseFn choose_fn = opts.choose_override;
  if (!choose_fn) {
    choose_fn = [&spec, &engine, &opts](const Cube& q) {
      return choose(spec, engine, q.as_exists(), opts.choose_cfg);
    };
  }

  BreachCallbacks cb2 = cb;
  cb2.level_hook = [&](int depth, const std::vector<const TableauNode*>& open) {
    std::vector<Cube> extra;
    std::vector<Candidate> cands;
    if (depth == 0 && opts.use_suggested) {
      for (const auto& s : spec.suggested_invariants) {
        auto cubes = to_primitive_differentiated(
            s, [&engine](const Cube& c) { return engine.check_cube_sat(c); });
        for (auto& c : cubes) cands.push_back(Candidate{std::move(c), Candidate::Origin::User});
      }
    }
    for (const auto* n : open) {
      auto more = choose_fn(n->cube);
      cands.insert(cands.end(), more.begin(), more.end());
    }
    for (const auto& cand : cands) {
      std::string key = cand.cube.key();
      if (used.count(key)) continue;
      auto ver = inv.verify_candidate(cand, opts.inv);
      used.insert(key);
      if (!ver) continue;
      inv_count++;
      for (const auto& c : ver->negated_cubes) extra.push_back(c);
    }
    if (cb.level_hook) {
      for (auto& c : cb.level_hook(depth, open)) extra.push_back(std::move(c));
    }
    return extra;
  };

  BreachEngine eng(spec, engine);
  ReachResult r = eng.run(u, opts.main, cb2);
  r.stats.invariants = inv_count;
  return r;
}

SinvResult sinv(const SystemSpec& spec, SmtEngine& engine, const ExistsI& u, SinvCoverMode mode,
                const Budget& budget, const Budget& inv_budget) {
  auto t0 = std::chrono::steady_clock::now();
  SinvResult res;
  long smt0 = engine.stats().total();
  auto finish = [&](SinvResult::Status st) {
    res.status = st;
    res.stats.smt = engine.stats().total() - smt0;
    res.stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
  };

  InvariantEngine inv(spec, engine);
  auto sat_cb = [&engine](const Cube& c) { return engine.check_cube_sat(c); };

  // ChooseCover: per disjunct, a formula it implies; identity always works,
  // index abstraction prefers a coarser verified cover
  auto cover = [&](const Cube& q) -> Cube {
    if (mode == SinvCoverMode::Identity) return q;
    size_t n = q.vars.size();
    std::vector<std::vector<Term>> splits;
    for (size_t i = 0; i < n; ++i)
      if (n > 1) splits.push_back({q.vars[i]});
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        if (n > 2) splits.push_back({q.vars[i], q.vars[j]});
    for (const auto& ui : splits) {
      auto cand = index_abstraction(spec, engine, q, ui);
      if (!cand) continue;
      if (!engine.implies(q.as_exists(), cand->cube.as_exists()))
        throw std::runtime_error("cover function violated the implication contract");
      if (inv.verify_candidate(*cand, inv_budget)) return cand->cube;
    }
    return q;
  };

  std::vector<Cube> p;
  for (auto& q : to_primitive_differentiated(u, sat_cb)) p.push_back(cover(q));
  std::vector<Cube> b;

  for (int depth = 0; depth < budget.max_depth; ++depth) {
    // P ∧ ¬B: keep only uncovered disjuncts
    std::vector<Cube> fresh;
    for (auto& c : p) {
      std::vector<Cube> priors = b;
      priors.insert(priors.end(), fresh.begin(), fresh.end());
      if (!engine.check_fixpoint(c, priors)) fresh.push_back(std::move(c));
    }
    if (fresh.empty()) {
      res.negated_cubes = b;
      res.stats.depth = depth;
      return finish(SinvResult::Status::Success);
    }
    for (const auto& c : fresh)
      if (engine.check_safety(spec.init, c)) return finish(SinvResult::Status::Failure);
    for (auto& c : fresh) b.push_back(std::move(c));
    res.stats.nodes = static_cast<long>(b.size());
    if (res.stats.nodes > budget.max_nodes) return finish(SinvResult::Status::BudgetExceeded);
    // P ← ChooseCover(Pre(τ, P))
    std::vector<Cube> next;
    size_t start = b.size() - fresh.size();
    for (size_t i = start; i < b.size(); ++i) {
      for (const auto& t : spec.transitions) {
        ExistsI pre = preimage(spec, t, b[i]);
        for (auto& q : to_primitive_differentiated(pre, sat_cb)) next.push_back(cover(q));
      }
    }
    p = std::move(next);
  }
  return finish(SinvResult::Status::BudgetExceeded);
}

}  // namespace arraymc
