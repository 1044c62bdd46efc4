#pragma once

#include <string>
#include <vector>

#include "arraymc/formula.hpp"
#include "arraymc/theories.hpp"

namespace arraymc {

/// One array-based transition system: index theory + element sorts + array
/// variables + initial ∀^I-formula + guarded-assignment transitions + unsafe
/// ∃^I-formula, plus optional user-suggested invariant candidates.
struct SystemSpec {
  std::string name;
  Signature sig;
  ForallI init;
  std::vector<TransitionRule> transitions;
  ExistsI unsafe;
  std::vector<ExistsI> suggested_invariants;

  const TransitionRule* find_transition(const std::string& tname) const {
    for (const auto& t : transitions)
      if (t.name == tname) return &t;
    return nullptr;
  }
};

}  // namespace arraymc
