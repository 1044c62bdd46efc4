#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "arraymc/oracle.hpp"
#include "arraymc/parser.hpp"
#include "arraymc/smt.hpp"

namespace arraymc::testutil {

inline SystemSpec load_corpus(const std::string& name) {
  std::ifstream in(std::string(ARRAYMC_CORPUS_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing corpus file " + name);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

// ---------- random ∃^{A,I}∀^I sentences + finite-model ground truth ----------

struct RandomSentenceGen {
  std::mt19937 rng;
  Signature sig;
  bool linear;

  explicit RandomSentenceGen(unsigned seed, bool linear_order) : rng(seed), linear(linear_order) {
    sig.index = std::make_shared<IndexTheory>(linear_order ? IndexTheory::Kind::LinearOrder
                                                           : IndexTheory::Kind::PureEquality);
    sig.elems["v"] = std::make_shared<ElemTheory>(ElemTheory::enumerated("v", {"1", "2"}));
    sig.arrays.push_back(ArrayDecl{"a", "v"});
  }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

  Sentence gen() {
    Sentence s;
    int ne = 1 + pick(3);  // 1..3 existential index vars
    int nu = pick(3);      // 0..2 universal index vars
    for (int i = 0; i < ne; ++i) s.evars.push_back(Term::index_var("x" + std::to_string(i)));
    for (int i = 0; i < nu; ++i) s.uvars.push_back(Term::index_var("y" + std::to_string(i)));
    if (pick(3) == 0) s.eelems.push_back(Term::elem_var("e0", "v"));
    s.matrix = gen_formula(s, 2);
    return s;
  }

  Term rand_index_var(const Sentence& s) {
    int n = static_cast<int>(s.evars.size() + s.uvars.size());
    int k = pick(n);
    return k < static_cast<int>(s.evars.size()) ? s.evars[k] : s.uvars[k - s.evars.size()];
  }

  Formula gen_atom(const Sentence& s) {
    switch (pick(linear ? 5 : 4)) {
      case 0: {
        Term r = Term::array_read("a", "v", rand_index_var(s));
        Term c = Term::elem_const(pick(2) ? "1" : "2", "v");
        return Formula::lit(Atom::eq(r, c), pick(2) == 0);
      }
      case 1: {
        Term r1 = Term::array_read("a", "v", rand_index_var(s));
        Term r2 = Term::array_read("a", "v", rand_index_var(s));
        return Formula::lit(Atom::eq(r1, r2), pick(2) == 0);
      }
      case 2:
        return Formula::lit(Atom::eq(rand_index_var(s), rand_index_var(s)), pick(2) == 0);
      case 3: {
        if (s.eelems.empty()) {
          Term r = Term::array_read("a", "v", rand_index_var(s));
          return Formula::lit(Atom::eq(r, Term::elem_const("1", "v")));
        }
        Term r = pick(2) ? Term::array_read("a", "v", rand_index_var(s))
                         : Term::elem_const(pick(2) ? "1" : "2", "v");
        return Formula::lit(Atom::eq(s.eelems[0], r), pick(2) == 0);
      }
      default:
        return Formula::lit(Atom::lt(rand_index_var(s), rand_index_var(s)));
    }
  }

  Formula gen_formula(const Sentence& s, int depth) {
    if (depth == 0 || pick(3) == 0) return gen_atom(s);
    int n = 2 + pick(2);
    std::vector<Formula> kids;
    for (int i = 0; i < n; ++i) kids.push_back(gen_formula(s, depth - 1));
    switch (pick(3)) {
      case 0: return Formula::mk_and(std::move(kids));
      case 1: return Formula::mk_or(std::move(kids));
      default: return Formula::mk_not(kids[0]);
    }
  }
};

// Exhaustive enumeration over finite index models of size <= max(1, #evars),
// justified by the finite-index-model property of the decidable fragment.
inline bool brute_force_sat(const Signature& sig, const Sentence& s) {
  SystemSpec dummy;
  dummy.sig = sig;
  Oracle oracle(dummy);
  int maxn = std::max<size_t>(1, s.evars.size());
  const auto& members = sig.elems.at("v")->members();
  for (int n = 1; n <= maxn; ++n) {
    Configuration base;
    base.size = n;
    base.structure.size = n;
    base.structure.succ.assign(n, -1);
    base.vals["a"].assign(n, ElemValue{});
    std::vector<size_t> cells(n, 0);
    while (true) {
      Configuration cfg = base;
      for (int p = 0; p < n; ++p) cfg.vals["a"][p] = ElemValue::of_sym(members[cells[p]]);
      // existential assignments (index + element), universal sweep
      std::vector<size_t> ev(s.evars.size(), 0);
      bool sat = false;
      while (!sat) {
        for (size_t em = 0; em < std::max<size_t>(1, s.eelems.empty() ? 1 : members.size());
             ++em) {
          std::map<std::string, int> env;
          for (size_t i = 0; i < s.evars.size(); ++i)
            env[s.evars[i].name()] = static_cast<int>(ev[i]);
          Configuration probe = cfg;  // element variables via a spare array slot
          (void)probe;
          // evaluate with element variable bound by substitution
          Formula m = s.matrix;
          if (!s.eelems.empty()) {
            std::map<std::string, Term> esub{
                {s.eelems[0].name(), Term::elem_const(members[em], "v")}};
            m = m.substitute(esub);
          }
          std::vector<size_t> uv(s.uvars.size(), 0);
          bool all = true;
          while (true) {
            for (size_t i = 0; i < s.uvars.size(); ++i)
              env[s.uvars[i].name()] = static_cast<int>(uv[i]);
            if (!oracle.eval_matrix(cfg, m, env)) {
              all = false;
              break;
            }
            size_t i = 0;
            for (; i < s.uvars.size(); ++i) {
              if (++uv[i] < static_cast<size_t>(n)) break;
              uv[i] = 0;
            }
            if (i == s.uvars.size()) break;
          }
          if (all) {
            sat = true;
            break;
          }
          if (s.eelems.empty()) break;
        }
        if (sat) break;
        size_t i = 0;
        for (; i < s.evars.size(); ++i) {
          if (++ev[i] < static_cast<size_t>(n)) break;
          ev[i] = 0;
        }
        if (i == s.evars.size()) break;
      }
      if (sat) return true;
      int p = 0;
      for (; p < n; ++p) {
        if (++cells[p] < members.size()) break;
        cells[p] = 0;
      }
      if (p == n) break;
    }
  }
  return false;
}

}  // namespace arraymc::testutil
