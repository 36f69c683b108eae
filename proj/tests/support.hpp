#pragma once

// Random instance generators and independent checkers shared by the unit and
// acceptance suites. Nothing here calls into the solver code paths it is
// used to check.

#include <cstdint>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "arttrack/core_model.hpp"
#include "arttrack/errors.hpp"
#include "arttrack/multicut_solver.hpp"

namespace arttrack::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct RandomInstanceSpec {
  int nodes = 6;
  double edge_probability = 0.5;
  double constrained_fraction = 0.3;
  double cost_range = 2.0;
  double edge_cost_range = 3.0;
  /// Cap on the number of edges per node for large instances (0 = none).
  int max_degree = 0;
};

/// Mixed-sign random instance. Constraints are added one at a time and kept
/// only while the constraint set stays consistent; must-link pairs are only
/// placed on existing edges.
inline ProblemGraph random_instance(std::mt19937_64& rng, const RandomInstanceSpec& spec) {
  const int n = spec.nodes;
  std::vector<double> costs(static_cast<std::size_t>(n));
  for (auto& c : costs) c = uniform(rng, -spec.cost_range, spec.cost_range);
  std::vector<std::tuple<NodeIndex, NodeIndex, double>> edges;
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  if (spec.max_degree == 0) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (uniform(rng, 0, 1) < spec.edge_probability)
          edges.emplace_back(a, b, uniform(rng, -spec.edge_cost_range, spec.edge_cost_range));
  } else {
    // Sparse: each node proposes a few random partners.
    std::set<std::pair<int, int>> seen;
    for (int a = 0; a < n; ++a)
      for (int k = 0; k < spec.max_degree / 2; ++k) {
        const int b = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
        if (a == b) continue;
        const auto key = std::minmax(a, b);
        if (!seen.insert(key).second) continue;
        edges.emplace_back(key.first, key.second,
                           uniform(rng, -spec.edge_cost_range, spec.edge_cost_range));
      }
  }

  std::vector<NodePair> must_link, must_cut;
  auto consistent = [&]() {
    try {
      apply_constraints(ProblemGraph::untyped(costs, edges, must_link, must_cut));
      return true;
    } catch (const InfeasibleError&) {
      return false;
    } catch (const StructuralError&) {
      return false;
    }
  };
  const auto pairs_wanted =
      static_cast<std::size_t>(spec.constrained_fraction * static_cast<double>(edges.size()) + 0.5);
  for (std::size_t k = 0; k < pairs_wanted; ++k) {
    if (uniform(rng, 0, 1) < 0.5 && !edges.empty()) {
      const auto& e = edges[rng() % edges.size()];
      must_link.emplace_back(std::get<0>(e), std::get<1>(e));
      if (!consistent()) must_link.pop_back();
    } else if (n >= 2) {
      const int a = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
      int b = static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
      if (b >= a) ++b;
      must_cut.emplace_back(a, b);
      if (!consistent()) must_cut.pop_back();
    }
  }
  return ProblemGraph::untyped(std::move(costs), edges, std::move(must_link), std::move(must_cut));
}

/// Every simple cycle of the graph as an ordered list of edge indices,
/// found by depth-first search from each start node through higher-indexed
/// nodes only (so each cycle appears in both orientations at most).
inline std::vector<std::vector<std::size_t>> enumerate_cycles(const ProblemGraph& graph) {
  std::vector<std::vector<std::size_t>> cycles;
  const NodeIndex n = graph.size();
  std::vector<bool> on_path(static_cast<std::size_t>(n), false);
  std::vector<std::size_t> edge_path;
  auto dfs = [&](auto&& self, NodeIndex start, NodeIndex u) -> void {
    for (const auto& inc : graph.neighbors(u)) {
      const NodeIndex w = inc.neighbor;
      if (w == start && edge_path.size() >= 2) {
        edge_path.push_back(inc.edge);
        cycles.push_back(edge_path);
        edge_path.pop_back();
      } else if (w > start && !on_path[static_cast<std::size_t>(w)]) {
        on_path[static_cast<std::size_t>(w)] = true;
        edge_path.push_back(inc.edge);
        self(self, start, w);
        edge_path.pop_back();
        on_path[static_cast<std::size_t>(w)] = false;
      }
    }
  };
  for (NodeIndex s = 0; s < n; ++s) {
    on_path[static_cast<std::size_t>(s)] = true;
    dfs(dfs, s, s);
    on_path[static_cast<std::size_t>(s)] = false;
  }
  return cycles;
}

/// Counts cycle inequalities "(1 - y_e) <= sum over the rest of (1 - y_e')"
/// violated by the labeling y.
inline std::size_t cycle_violations(const std::vector<std::vector<std::size_t>>& cycles,
                                    const std::vector<std::uint8_t>& y) {
  std::size_t bad = 0;
  for (const auto& cycle : cycles) {
    int cut = 0;
    for (auto e : cycle) cut += y[e] ? 0 : 1;
    for (auto e : cycle) {
      const int lhs = y[e] ? 0 : 1;
      if (lhs > cut - lhs) ++bad;
    }
  }
  return bad;
}

}  // namespace arttrack::testing
