#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "arraymc/reachability.hpp"

namespace arraymc {

/// A candidate invariant: the ∀^I-formula ¬cube, produced by abstracting a
/// pre-image disjunct (or supplied by the user).
struct Candidate {
  enum class Origin { IndexAbstraction, SignatureAbstraction, User };
  Cube cube;
  Origin origin = Origin::IndexAbstraction;
};

/// A candidate that survived the resource-bounded backward run: the negation
/// of the disjunction of `negated_cubes` is inductive and init-disjoint.
struct VerifiedInvariant {
  std::vector<Cube> negated_cubes;  // B_CINV
  Candidate source;
};

/// Min(φ, a, ui): φ plus, for every substitution σ into the representative
/// Σ_I(ui)-terms, the requirement that a satisfying σ-instance names every ui.
Formula min_formula(const Signature& sig, const Cube& c);

/// Index abstraction for the split (ui, uj = rest): keeps the Σ_I(ui)-literals
/// when they are maximal (each Σ_I(ui)-atom decided modulo the theory) and
/// projects the a[uj]-reads away by element quantifier elimination.
std::optional<Candidate> index_abstraction(const SystemSpec& spec, SmtEngine& engine,
                                           const Cube& c, const std::vector<Term>& ui);

/// Signature abstraction: eliminate every literal reading one of the given
/// arrays via quantifier elimination; unused index variables are dropped.
std::optional<Candidate> signature_abstraction(const SystemSpec& spec, SmtEngine& engine,
                                               const Cube& c,
                                               const std::set<std::string>& arrays);

enum class AbsStrategy { Index, Signature, Both };

struct ChooseConfig {
  AbsStrategy strategy = AbsStrategy::Index;
  std::vector<std::string> sig_arrays;  // empty: one candidate per single array
};

/// Candidate generation from a pre-image formula: one batch of candidates per
/// primitive differentiated disjunct, each implied by its source disjunct
/// (checked; failures discarded) and deduplicated up to mutual implication.
std::vector<Candidate> choose(const SystemSpec& spec, SmtEngine& engine, const ExistsI& p,
                              const ChooseConfig& cfg);

/// Resource-bounded candidate verification with memoization.
class InvariantEngine {
 public:
  InvariantEngine(const SystemSpec& spec, SmtEngine& engine) : spec_(spec), engine_(engine) {}

  /// Runs the bounded backward search on the candidate; Safe yields the
  /// verified invariant, Unsafe or BudgetExceeded yields nothing.
  std::optional<VerifiedInvariant> verify_candidate(const Candidate& cand, const Budget& budget);

 private:
  const SystemSpec& spec_;
  SmtEngine& engine_;
  std::map<std::string, std::optional<VerifiedInvariant>> cache_;
};

/// Independent re-verification of a verified invariant ¬(⋁B): I ∧ B unsat and
/// every transition pre-image of every cube of B implied by B.
bool recheck_invariant(const SystemSpec& spec, SmtEngine& engine, const std::vector<Cube>& b);

using ChooseFn = std::function<std::vector<Candidate>(const Cube&)>;

struct BreachInvOptions {
  Budget main;
  Budget inv{6, 200};
  ChooseConfig choose_cfg;
  ChooseFn choose_override;  // used by the soundness fuzzer
  bool use_suggested = true;
};

/// BReach with interleaved invariant synthesis: per level, candidates derived
/// from the open pre-image cubes are verified on a bounded budget and the
/// successes are disjoined into the accumulated set; verdicts stay sound
/// regardless of the candidates chosen.
ReachResult breach_plus_inv(const SystemSpec& spec, SmtEngine& engine, const ExistsI& u,
                            const BreachInvOptions& opts,
                            const BreachCallbacks& cb = {});

enum class SinvCoverMode { Identity, IndexAbstraction };

struct SinvResult {
  enum class Status { Success, Failure, BudgetExceeded };
  Status status = Status::BudgetExceeded;
  std::vector<Cube> negated_cubes;  // returned invariant is ¬(⋁ cubes)
  RunStats stats;
};

/// The dual invariant-synthesis procedure: iterate covers of pre-images,
/// failing on init intersection; with the identity cover this computes the
/// same fix-point as the backward reachability engine.
SinvResult sinv(const SystemSpec& spec, SmtEngine& engine, const ExistsI& u, SinvCoverMode mode,
                const Budget& budget, const Budget& inv_budget);

}  // namespace arraymc
