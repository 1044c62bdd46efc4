#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "arraymc/smt.hpp"
#include "arraymc/system.hpp"

namespace arraymc {

struct Budget {
  int max_depth = 50;
  long max_nodes = 20000;
};

enum class NodeStatus { Open, Expanded, ClosedUnsat, ClosedFixpoint, DeletedSubsumed, UnsafeHit };

struct TableauNode {
  int id = -1;
  int depth = 0;
  Cube cube;
  int parent = -1;      // -1 for roots
  std::string via;      // transition labelling the edge to the parent
  NodeStatus status = NodeStatus::Open;
};

struct RunStats {
  int depth = 0;        // d: number of expanded levels
  long nodes = 0;       // #n: expanded nodes
  long deleted = 0;     // #d: nodes deleted by the subsumption sweep
  long smt = 0;         // #SMT: solver invocations
  int invariants = 0;   // #inv
  double seconds = 0;
};

struct ReachResult {
  enum class Verdict { Safe, Unsafe, BudgetExceeded };
  Verdict verdict = Verdict::BudgetExceeded;
  std::vector<Cube> fixpoint;       // B, when Safe
  std::vector<std::string> trace;   // transition names, leaf to root, when Unsafe
  RunStats stats;
};

struct BreachCallbacks {
  /// Invoked on every computed pre-image (oracle cross-validation hook).
  std::function<void(const TransitionRule&, const Cube&, const ExistsI&)> on_preimage;
  /// Invoked at the start of each level with that level's open nodes; cubes
  /// returned are disjoined into the accumulated set B (verified invariants).
  std::function<std::vector<Cube>(int depth, const std::vector<const TableauNode*>&)> level_hook;
};

/// Pre(τ, K) as an ∃^I-formula: guard ∧ K with primed reads replaced by the
/// case-defined updates, case functions eliminated.
ExistsI preimage(const SystemSpec& spec, const TransitionRule& t, const Cube& k);

/// The tableaux backward-reachability engine.
class BreachEngine {
 public:
  BreachEngine(const SystemSpec& spec, SmtEngine& engine)
      : spec_(spec), engine_(engine) {}

  ReachResult run(const ExistsI& u, const Budget& budget, const BreachCallbacks& cb = {});

  void set_sweep_enabled(bool on) { sweep_enabled_ = on; }

  /// Delete retained nodes whose cube is covered by the other retained cubes
  /// (excluding the node itself and its descendants). Returns deletions made.
  int subsume_sweep();

  const std::vector<TableauNode>& nodes() const { return nodes_; }

  /// Children created by expanding one open node (PreImg + Beta + NotAppl).
  std::vector<int> expand(int node_id, const BreachCallbacks& cb);

 private:
  struct BEntry {
    Cube cube;
    int node_id;  // -1 for invariant cubes
    bool deleted = false;
  };

  const SystemSpec& spec_;
  SmtEngine& engine_;
  bool sweep_enabled_ = true;
  std::vector<TableauNode> nodes_;
  std::vector<BEntry> b_;
  size_t swept_upto_ = 0;

  int sweep_incremental();

  std::vector<Cube> retained(int exclude_node = -1, bool exclude_descendants = false) const;
  bool is_descendant(int node, int ancestor) const;
};

}  // namespace arraymc
