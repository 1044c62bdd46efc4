#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arraymc/formula.hpp"
#include "arraymc/theories.hpp"

namespace arraymc {

/// ∃^{A,I}∀^I-sentence: existential index/element prefix, universal index
/// block, quantifier-free matrix over the signature's arrays.
struct Sentence {
  std::vector<Term> evars;   // existential index variables
  std::vector<Term> eelems;  // existential element variables
  std::vector<Term> uvars;   // universal index variables
  Formula matrix;
};

/// A finite index model together with the element assignment to array reads,
/// as produced by a successful satisfiability check.
struct FiniteWitness {
  int size = 0;
  IndexTheory::Structure structure;               // succ edges + constants
  std::map<std::string, int> index_assign;        // index term (printed) -> position
  // array name -> per-position value (positions 0..size-1, total)
  std::map<std::string, std::vector<ElemValue>> array_vals;
  std::map<std::string, ElemValue> elem_assign;   // free element variables

  std::string str() const;
};

struct SmtStatsSnapshot {
  long safety = 0;
  long fixpoint = 0;
  long other = 0;
  long total() const { return safety + fixpoint + other; }
};

/// Decides A_I^E-satisfiability of ∃^{A,I}∀^I-sentences by instantiating the
/// universal block over the representative Σ_I(ui)-terms and searching the
/// resulting ground problem with the two theory solvers; serves the safety
/// and fix-point checks of the reachability engine.
class SmtEngine {
 public:
  explicit SmtEngine(Signature sig) : sig_(std::move(sig)) {}

  struct Result {
    bool sat = false;
    FiniteWitness witness;  // meaningful when sat
  };

  Result check_sentence(const Sentence& s);

  /// Satisfiability of one primitive differentiated cube: the index and
  /// element literal sets are split and solved directly, array reads
  /// abstracted consistently (identical reads share one variable).
  bool check_cube_sat(const Cube& c, FiniteWitness* w = nullptr);

  /// FixPoint test: c ∧ ⋀{¬K' | K' in priors} is unsatisfiable. Priors are
  /// given in chronological order and conjoined newest-first, with each ¬K'
  /// contributing one universal block instantiated over c's representatives.
  bool check_fixpoint(const Cube& c, const std::vector<Cube>& priors);

  /// Safety test: I ∧ c satisfiable.
  bool check_safety(const ForallI& init, const Cube& c);

  /// A_I^E ⊨ a → b (an ∃^{A,I}∀^I-sentence check).
  bool implies(const ExistsI& a, const ExistsI& b);

  void dump_smtlib2(const Sentence& s, const std::string& path) const;
  std::string smtlib2_text(const Sentence& s) const;

  /// When set, every top-level sentence checked is also dumped here.
  void set_dump_dir(std::string dir) { dump_dir_ = std::move(dir); }

  const Signature& sig() const { return sig_; }

  SmtStatsSnapshot stats() const {
    return SmtStatsSnapshot{n_safety_.load(), n_fixpoint_.load(), n_other_.load()};
  }
  void reset_stats() { n_safety_ = n_fixpoint_ = n_other_ = 0; }

  /// Does a single prior cube subsume c (an injective variable matching whose
  /// literals are all entailed by c)? Exposed for the subsumption sweep tests.
  bool subsumes(const Cube& prior, const Cube& c);

  /// Single-prior subsumption screen against many priors with one shared
  /// context (cheap preselection for the subsumption sweep).
  bool subsumes_any(const std::vector<Cube>& priors, const Cube& c);

  /// Evaluate a sentence on a finite witness model (used for witness
  /// minimization and in tests).
  bool eval_on_witness(const FiniteWitness& w, const Sentence& s) const;

 private:
  enum class CheckKind { Safety, Fixpoint, Other };
  void bump(CheckKind k);
  void maybe_dump(const Sentence& s, CheckKind k);
  Result decide(const Sentence& s, CheckKind kind);
  void minimize_witness(FiniteWitness& w, const Sentence& s) const;

  Signature sig_;
  std::atomic<long> n_safety_{0}, n_fixpoint_{0}, n_other_{0};
  mutable std::atomic<long> dump_counter_{0};
  std::string dump_dir_;
};

}  // namespace arraymc
