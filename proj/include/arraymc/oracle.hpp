#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arraymc/smt.hpp"
#include "arraymc/system.hpp"

namespace arraymc {

/// A finite-index model restricted to its arrays: the semantic ground truth
/// every symbolic result is validated against.
struct Configuration {
  int size = 0;
  IndexTheory::Structure structure;
  std::map<std::string, std::vector<ElemValue>> vals;  // array -> per-position

  std::string key() const;  // exact identity (structure + values)
  std::string str() const;
};

/// Brute-force semantics on finite-index models: configuration enumeration,
/// formula evaluation, transition application, the embedding pre-order,
/// diagram formulas, bases and covers, trace replay.
class Oracle {
 public:
  explicit Oracle(const SystemSpec& spec) : spec_(spec) {}

  /// All configurations with 1 <= |domain| <= max_index_size, up to index
  /// isomorphism. Rational sorts range over a grid of 2*max_index_size+1
  /// ordered points (only the order type matters for order literals).
  std::vector<Configuration> enumerate_configurations(int max_index_size) const;

  bool eval(const Configuration& c, const ExistsI& f) const;
  bool eval(const Configuration& c, const ForallI& f) const;
  bool eval_matrix(const Configuration& c, const Formula& f,
                   const std::map<std::string, int>& env) const;

  /// All successors of c under t: one per witness tuple satisfying the guard.
  std::vector<Configuration> step(const Configuration& c, const TransitionRule& t) const;

  /// Configurations within the bound that have a t-successor satisfying f.
  std::vector<Configuration> oracle_preimage(const TransitionRule& t, const ExistsI& f,
                                             int max_index_size) const;

  /// Embedding pre-order: an injective relation-preserving-and-reflecting
  /// index map plus the induced element embedding.
  bool config_leq(const Configuration& s, const Configuration& t) const;
  bool config_equiv(const Configuration& s, const Configuration& t) const;

  /// Diagram formula K_s: the cube whose extension is the upward cone of s.
  Cube diagram_formula(const Configuration& c) const;

  /// <=-minimal satisfying configurations within the size bound, deduplicated
  /// modulo equivalence.
  std::vector<Configuration> basis_of(const ExistsI& f, int max_index_size) const;

  /// K covers L: L implies K (SMT check) and every basis element of K embeds
  /// below some basis element of L (within the bound).
  bool covers_check(const ExistsI& k, const ExistsI& l, int bound, SmtEngine& engine) const;

  /// Forward replay of a transition-name sequence from some initial
  /// configuration into the unsafe set; returns the concrete run if found.
  std::optional<std::vector<Configuration>> replay(const std::vector<std::string>& trace,
                                                   int max_index_size) const;

  /// Bounded forward search: is any unsafe configuration reachable from the
  /// initial ones within `depth` steps at the given size?
  bool forward_reach_unsafe(int max_index_size, int depth) const;

  /// Restriction of a configuration to a subset of its positions (the
  /// generated sub-configuration for relational index theories).
  static Configuration restrict(const Configuration& c, const std::vector<int>& keep);

  const SystemSpec& spec() const { return spec_; }

 private:
  const SystemSpec& spec_;
  std::vector<ElemValue> value_domain(const std::string& sort, int max_index_size) const;
  std::string iso_key(const Configuration& c) const;
};

}  // namespace arraymc
