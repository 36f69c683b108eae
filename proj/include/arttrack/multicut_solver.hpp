#pragma once

// Solvers for the minimum cost subgraph multicut problem.
//
// solve_exact enumerates every (selection, connected partition) pair and is
// the reference oracle for tiny instances. solve_local_search works on the
// must-link-contracted instance and combines greedy agglomeration with
// Kernighan-Lin style node moves, selection toggles and cluster splits.

#include <cstdint>
#include <string_view>
#include <vector>

#include "arttrack/core_model.hpp"

namespace arttrack {

struct SolverParams {
  /// Largest instance solve_exact accepts. Bell(n + 1) labelings are
  /// enumerated, so the hard ceiling is kMaxExactNodes.
  int max_exact_nodes = 10;
  /// Upper bound on accepted local-search moves.
  std::int64_t move_budget = 1'000'000;
  std::uint64_t seed = 0;

  static constexpr int kMaxExactNodes = 12;

  /// Throws ConfigError on out-of-range values.
  void check() const;
};

enum class MoveKind { MergeClusters, MoveNode, ToggleSelection, SplitCluster };

std::string_view to_string(MoveKind kind);

struct MoveRecord {
  MoveKind kind;
  double delta;  // objective change caused by the move, always < 0
};

struct MoveLog {
  double initial_objective = 0.0;
  std::vector<MoveRecord> moves;

  double total_delta() const;
};

/// Instance with every must-link group contracted into one super-node.
struct ConstrainedGraph {
  struct SuperEdge {
    int a;  // a < b
    int b;
    double cost;  // summed over all original edges between the groups
  };

  /// Original node index -> super-node.
  std::vector<int> group_of;
  /// Super-node -> original members, ascending.
  std::vector<std::vector<NodeIndex>> members;
  /// Member node costs plus costs of edges inside the group.
  std::vector<double> cost;
  /// Groups built from must-link pairs must be selected.
  std::vector<bool> forced;
  std::vector<SuperEdge> edges;
  /// Super-node pairs that may never share a cluster, (a < b), sorted.
  std::vector<std::pair<int, int>> must_cut;

  int size() const { return static_cast<int>(members.size()); }
  /// Expands a super-node labeling to the original nodes.
  Solution expand(const std::vector<int>& super_labels) const;
};

/// Contracts must-link pairs and lifts must-cut pairs to the contracted
/// instance. Throws InfeasibleError when a must-cut pair lies inside one
/// must-link group (the message names the linking chain) or when a must-link
/// group is not connected by edges among its own members.
ConstrainedGraph apply_constraints(const ProblemGraph& graph);

/// Global minimizer by enumeration; ties go to the lexicographically smallest
/// canonical label vector (unselected < cluster 0 < cluster 1 ...). Throws
/// SizeError above params.max_exact_nodes and InfeasibleError when no labeling
/// satisfies the constraints.
Solution solve_exact(const ProblemGraph& graph, const SolverParams& params);

/// Feasible, deterministic local search. When `log` is given it receives
/// the objective of the initial labeling and every accepted move.
Solution solve_local_search(const ProblemGraph& graph, const SolverParams& params,
                            MoveLog* log = nullptr);

/// Runs local search with seeds params.seed .. params.seed + seeds - 1 and
/// keeps the best objective (first seed wins ties).
Solution solve_best_of_seeds(const ProblemGraph& graph, const SolverParams& params, int seeds);

}  // namespace arttrack
