#include "arttrack/multicut_solver.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include "arttrack/errors.hpp"
#include "disjoint_sets.hpp"

namespace arttrack {

namespace {

// Moves must improve the objective by more than this to be accepted.
constexpr double kEps = 1e-10;

}  // namespace

void SolverParams::check() const {
  if (max_exact_nodes < 0 || max_exact_nodes > kMaxExactNodes)
    throw ConfigError("max_exact_nodes must lie in [0, " + std::to_string(kMaxExactNodes) + "]");
  if (move_budget < 0) throw ConfigError("move_budget must be non-negative");
}

std::string_view to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::MergeClusters: return "merge-clusters";
    case MoveKind::MoveNode: return "move-node";
    case MoveKind::ToggleSelection: return "toggle-selection";
    case MoveKind::SplitCluster: return "split-cluster";
  }
  return "?";
}

double MoveLog::total_delta() const {
  double sum = 0.0;
  for (const auto& m : moves) sum += m.delta;
  return sum;
}

// ---------------------------------------------------------------------------
// Constraint contraction

Solution ConstrainedGraph::expand(const std::vector<int>& super_labels) const {
  std::vector<int> labels(group_of.size(), Solution::kUnselected);
  for (std::size_t i = 0; i < group_of.size(); ++i)
    labels[i] = super_labels.at(static_cast<std::size_t>(group_of[i]));
  return Solution(std::move(labels)).canonical();
}

namespace {

std::string link_chain(const ProblemGraph& graph, NodeIndex from, NodeIndex to) {
  std::map<NodeIndex, std::vector<NodeIndex>> links;
  for (const auto& [a, b] : graph.must_link()) {
    links[a].push_back(b);
    links[b].push_back(a);
  }
  std::map<NodeIndex, NodeIndex> parent{{from, from}};
  std::queue<NodeIndex> frontier;
  frontier.push(from);
  while (!frontier.empty() && !parent.count(to)) {
    const NodeIndex u = frontier.front();
    frontier.pop();
    for (NodeIndex w : links[u])
      if (parent.emplace(w, u).second) frontier.push(w);
  }
  std::vector<NodeIndex> path{to};
  while (path.back() != from) path.push_back(parent.at(path.back()));
  std::string out;
  for (auto it = path.rbegin(); it != path.rend(); ++it) {
    if (!out.empty()) out += " -> ";
    out += std::to_string(*it);
  }
  return out;
}

}  // namespace

ConstrainedGraph apply_constraints(const ProblemGraph& graph) {
  const auto n = static_cast<std::size_t>(graph.size());
  detail::DisjointSets links(n);
  for (const auto& [a, b] : graph.must_link())
    links.unite(static_cast<std::size_t>(a), static_cast<std::size_t>(b));

  ConstrainedGraph out;
  out.group_of.assign(n, -1);
  std::map<std::size_t, int> root_to_group;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = root_to_group.try_emplace(links.find(i), out.size());
    if (fresh) out.members.emplace_back();
    out.group_of[i] = it->second;
    out.members[static_cast<std::size_t>(it->second)].push_back(static_cast<NodeIndex>(i));
  }
  const auto groups = static_cast<std::size_t>(out.size());
  out.cost.assign(groups, 0.0);
  out.forced.assign(groups, false);
  for (std::size_t g = 0; g < groups; ++g) out.forced[g] = out.members[g].size() > 1;

  for (const auto& [a, b] : graph.must_cut()) {
    const int ga = out.group_of[static_cast<std::size_t>(a)];
    const int gb = out.group_of[static_cast<std::size_t>(b)];
    if (ga == gb)
      throw InfeasibleError("must_link chain " + link_chain(graph, a, b) + " joins must_cut pair (" +
                            std::to_string(a) + ", " + std::to_string(b) + ")");
    out.must_cut.emplace_back(std::min(ga, gb), std::max(ga, gb));
  }
  std::sort(out.must_cut.begin(), out.must_cut.end());
  out.must_cut.erase(std::unique(out.must_cut.begin(), out.must_cut.end()), out.must_cut.end());

  // Members of a group share a cluster, so the group must be connected on
  // its own for that cluster to be a connected component.
  for (std::size_t g = 0; g < groups; ++g) {
    const auto& members = out.members[g];
    if (members.size() < 2) continue;
    std::set<NodeIndex> reached{members.front()};
    std::queue<NodeIndex> frontier;
    frontier.push(members.front());
    while (!frontier.empty()) {
      const NodeIndex u = frontier.front();
      frontier.pop();
      for (const auto& inc : graph.neighbors(u))
        if (out.group_of[static_cast<std::size_t>(inc.neighbor)] == static_cast<int>(g) &&
            reached.insert(inc.neighbor).second)
          frontier.push(inc.neighbor);
    }
    if (reached.size() != members.size())
      throw InfeasibleError("must_link group containing node " + std::to_string(members.front()) +
                            " is not connected by edges among its members");
  }

  for (std::size_t i = 0; i < n; ++i)
    out.cost[static_cast<std::size_t>(out.group_of[i])] += graph.node_cost(static_cast<NodeIndex>(i));
  std::map<std::pair<int, int>, double> between;
  for (const auto& e : graph.edges()) {
    const int ga = out.group_of[static_cast<std::size_t>(e.u)];
    const int gb = out.group_of[static_cast<std::size_t>(e.v)];
    if (ga == gb)
      out.cost[static_cast<std::size_t>(ga)] += e.cost;
    else
      between[{std::min(ga, gb), std::max(ga, gb)}] += e.cost;
  }
  out.edges.reserve(between.size());
  for (const auto& [key, cost] : between) out.edges.push_back({key.first, key.second, cost});
  return out;
}

// ---------------------------------------------------------------------------
// Exact enumeration

namespace {

class ExactSearch {
 public:
  ExactSearch(const ProblemGraph& graph) : graph_(graph), n_(static_cast<std::size_t>(graph.size())) {
    earlier_edges_.resize(n_);
    earlier_links_.resize(n_);
    earlier_cuts_.resize(n_);
    for (const auto& e : graph.edges())
      earlier_edges_[static_cast<std::size_t>(e.v)].emplace_back(e.u, e.cost);
    for (const auto& [a, b] : graph.must_link()) earlier_links_[static_cast<std::size_t>(b)].push_back(a);
    for (const auto& [a, b] : graph.must_cut()) earlier_cuts_[static_cast<std::size_t>(b)].push_back(a);
    labels_.assign(n_, Solution::kUnselected);
  }

  bool run() {
    descend(0, 0, 0.0);
    return found_;
  }

  const std::vector<int>& best() const { return best_; }

 private:
  void descend(std::size_t i, int clusters_used, double partial) {
    if (i == n_) {
      if (partial < best_objective_ - 1e-12 && clusters_connected(clusters_used)) {
        best_objective_ = partial;
        best_ = labels_;
        found_ = true;
      }
      return;
    }
    // Labels in increasing order, so the first optimum found is the
    // lexicographically smallest one.
    for (int label = Solution::kUnselected; label <= clusters_used; ++label) {
      if (!admissible(i, label)) continue;
      labels_[i] = label;
      double step = 0.0;
      if (label != Solution::kUnselected) {
        step = graph_.node_cost(static_cast<NodeIndex>(i));
        for (const auto& [j, c] : earlier_edges_[i])
          if (labels_[static_cast<std::size_t>(j)] == label) step += c;
      }
      descend(i + 1, label == clusters_used ? clusters_used + 1 : clusters_used, partial + step);
    }
    labels_[i] = Solution::kUnselected;
  }

  bool admissible(std::size_t i, int label) const {
    for (NodeIndex j : earlier_links_[i]) {
      const int lj = labels_[static_cast<std::size_t>(j)];
      if (label == Solution::kUnselected || lj != label) return false;
    }
    if (label != Solution::kUnselected)
      for (NodeIndex j : earlier_cuts_[i])
        if (labels_[static_cast<std::size_t>(j)] == label) return false;
    // A must-link partner later in the order needs this node selected.
    if (label == Solution::kUnselected)
      for (const auto& [a, b] : graph_.must_link())
        if (static_cast<std::size_t>(a) == i) return false;
    return true;
  }

  bool clusters_connected(int clusters_used) const {
    detail::DisjointSets sets(n_);
    for (const auto& e : graph_.edges()) {
      const int lu = labels_[static_cast<std::size_t>(e.u)];
      if (lu != Solution::kUnselected && lu == labels_[static_cast<std::size_t>(e.v)])
        sets.unite(static_cast<std::size_t>(e.u), static_cast<std::size_t>(e.v));
    }
    std::vector<std::size_t> root(static_cast<std::size_t>(clusters_used), n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const int l = labels_[i];
      if (l == Solution::kUnselected) continue;
      auto& r = root[static_cast<std::size_t>(l)];
      if (r == n_)
        r = sets.find(i);
      else if (r != sets.find(i))
        return false;
    }
    return true;
  }

  const ProblemGraph& graph_;
  std::size_t n_;
  std::vector<std::vector<std::pair<NodeIndex, double>>> earlier_edges_;
  std::vector<std::vector<NodeIndex>> earlier_links_;
  std::vector<std::vector<NodeIndex>> earlier_cuts_;
  std::vector<int> labels_;
  std::vector<int> best_;
  double best_objective_ = std::numeric_limits<double>::infinity();
  bool found_ = false;
};

}  // namespace

Solution solve_exact(const ProblemGraph& graph, const SolverParams& params) {
  params.check();
  if (graph.size() > params.max_exact_nodes)
    throw SizeError("exact solver limited to " + std::to_string(params.max_exact_nodes) +
                    " nodes, instance has " + std::to_string(graph.size()));
  ExactSearch search(graph);
  if (!search.run()) throw InfeasibleError("no labeling satisfies the must_link/must_cut constraints");
  return Solution(search.best());
}

// ---------------------------------------------------------------------------
// Local search

namespace {

class LocalSearch {
 public:
  LocalSearch(const ConstrainedGraph& g, const SolverParams& params, MoveLog* log)
      : g_(g), params_(params), log_(log), rng_(params.seed) {
    const auto n = static_cast<std::size_t>(g.size());
    adj_.resize(n);
    for (const auto& e : g.edges) {
      adj_[static_cast<std::size_t>(e.a)].emplace_back(e.b, e.cost);
      adj_[static_cast<std::size_t>(e.b)].emplace_back(e.a, e.cost);
    }
    cut_adj_.resize(n);
    for (const auto& [a, b] : g.must_cut) {
      cut_adj_[static_cast<std::size_t>(a)].push_back(b);
      cut_adj_[static_cast<std::size_t>(b)].push_back(a);
    }
    label_.assign(n, Solution::kUnselected);
    scratch_.assign(n, 0.0);
  }

  std::vector<int> run() {
    initialize();
    bool improved = true;
    while (improved && budget_left()) {
      improved = false;
      improved |= merge_phase();
      improved |= node_pass();
      improved |= split_pass();
      improved |= drop_pass();
    }
    return label_;
  }

  const std::vector<int>& labels() const { return label_; }

 private:
  // --- bookkeeping -------------------------------------------------------

  bool budget_left() const { return accepted_ < params_.move_budget; }

  void record(MoveKind kind, double delta) {
    ++accepted_;
    if (log_) log_->moves.push_back({kind, delta});
  }

  int new_cluster() {
    if (!free_ids_.empty()) {
      const int id = free_ids_.back();
      free_ids_.pop_back();
      return id;
    }
    members_.emplace_back();
    return static_cast<int>(members_.size() - 1);
  }

  std::vector<int>& members(int c) { return members_[static_cast<std::size_t>(c)]; }
  int& label(int v) { return label_[static_cast<std::size_t>(v)]; }

  void add_to(int v, int c) {
    label(v) = c;
    members(c).push_back(v);
  }

  void remove_from_cluster(int v) {
    const int c = label(v);
    auto& m = members(c);
    m.erase(std::find(m.begin(), m.end(), v));
    label(v) = Solution::kUnselected;
    if (m.empty())
      free_ids_.push_back(c);
    else
      split_components(c);
  }

  /// Keeps the first connected component of cluster c under id c and moves
  /// every further component to a fresh id. No edges run between distinct
  /// components, so the objective is unchanged.
  void split_components(int c) {
    auto remaining = members(c);
    if (remaining.size() < 2) return;
    std::sort(remaining.begin(), remaining.end());
    std::set<int> unvisited(remaining.begin(), remaining.end());
    bool first = true;
    while (!unvisited.empty()) {
      std::vector<int> component{*unvisited.begin()};
      unvisited.erase(unvisited.begin());
      for (std::size_t k = 0; k < component.size(); ++k)
        for (const auto& [w, cost] : adj_[static_cast<std::size_t>(component[k])]) {
          auto it = unvisited.find(w);
          if (it != unvisited.end()) {
            unvisited.erase(it);
            component.push_back(w);
          }
        }
      if (first) {
        if (unvisited.empty()) return;
        members(c) = component;
        first = false;
      } else {
        const int fresh = new_cluster();
        for (int v : component) label(v) = fresh;
        members(fresh) = std::move(component);
      }
    }
  }

  bool conflicts(int v, int c) const {
    for (int w : cut_adj_[static_cast<std::size_t>(v)])
      if (label_[static_cast<std::size_t>(w)] == c) return true;
    return false;
  }

  bool clusters_conflict(int a, int b) {
    const auto& small = members(a).size() <= members(b).size() ? members(a) : members(b);
    const int other = members(a).size() <= members(b).size() ? b : a;
    for (int v : small)
      if (conflicts(v, other)) return true;
    return false;
  }

  // --- phases ------------------------------------------------------------

  void initialize() {
    for (int v = 0; v < g_.size(); ++v)
      if (g_.forced[static_cast<std::size_t>(v)] || g_.cost[static_cast<std::size_t>(v)] <= 0.0)
        add_to(v, new_cluster());
    if (log_) {
      log_->moves.clear();
      log_->initial_objective = 0.0;
      for (int v = 0; v < g_.size(); ++v)
        if (label_[static_cast<std::size_t>(v)] != Solution::kUnselected)
          log_->initial_objective += g_.cost[static_cast<std::size_t>(v)];
    }
  }

  /// Greedy agglomeration: repeatedly merge the edge-connected cluster pair
  /// with the most negative connecting weight.
  bool merge_phase() {
    std::vector<std::map<int, double>> between(members_.size());
    for (const auto& e : g_.edges) {
      const int la = label(e.a), lb = label(e.b);
      if (la == Solution::kUnselected || lb == Solution::kUnselected || la == lb) continue;
      between[static_cast<std::size_t>(la)][lb] += e.cost;
      between[static_cast<std::size_t>(lb)][la] += e.cost;
    }
    using Entry = std::tuple<double, int, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    for (std::size_t a = 0; a < between.size(); ++a)
      for (const auto& [b, w] : between[a])
        if (static_cast<int>(a) < b && w < -kEps) queue.emplace(w, static_cast<int>(a), b);

    bool improved = false;
    while (!queue.empty() && budget_left()) {
      const auto [w, a, b] = queue.top();
      queue.pop();
      auto& row = between[static_cast<std::size_t>(a)];
      auto it = row.find(b);
      if (members(a).empty() || members(b).empty() || it == row.end() || it->second != w) continue;
      if (clusters_conflict(a, b)) continue;

      const int keep = members(a).size() >= members(b).size() ? a : b;
      const int gone = keep == a ? b : a;
      for (int v : members(gone)) add_to(v, keep);
      members(gone).clear();
      free_ids_.push_back(gone);
      record(MoveKind::MergeClusters, w);
      improved = true;

      auto& keep_row = between[static_cast<std::size_t>(keep)];
      keep_row.erase(gone);
      for (const auto& [x, wx] : between[static_cast<std::size_t>(gone)]) {
        if (x == keep) continue;
        auto& other_row = between[static_cast<std::size_t>(x)];
        other_row.erase(gone);
        const double merged = (keep_row[x] += wx);
        other_row[keep] = merged;
      }
      between[static_cast<std::size_t>(gone)].clear();
      for (const auto& [x, wx] : keep_row)
        if (wx < -kEps) queue.emplace(wx, std::min(keep, x), std::max(keep, x));
    }
    return improved;
  }

  /// Relocation and selection toggling of single super-nodes.
  bool node_pass() {
    std::vector<int> order(static_cast<std::size_t>(g_.size()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng_() % i);
      std::swap(order[i - 1], order[j]);
    }

    bool improved = false;
    std::vector<int> touched;
    for (int v : order) {
      if (!budget_left()) break;
      touched.clear();
      if (scratch_.size() < members_.size()) scratch_.resize(members_.size(), 0.0);
      for (const auto& [u, cost] : adj_[static_cast<std::size_t>(v)]) {
        const int c = label(u);
        if (c == Solution::kUnselected) continue;
        if (std::find(touched.begin(), touched.end(), c) == touched.end()) touched.push_back(c);
        scratch_[static_cast<std::size_t>(c)] += cost;
      }
      std::sort(touched.begin(), touched.end());

      const int cur = label(v);
      const double own_cost = g_.cost[static_cast<std::size_t>(v)];
      double best = -kEps;
      enum class Action { None, Unselect, Singleton, Join } action = Action::None;
      int target = Solution::kUnselected;
      auto consider = [&](double delta, Action a, int c) {
        if (delta < best) {
          best = delta;
          action = a;
          target = c;
        }
      };

      if (cur != Solution::kUnselected) {
        const double own = scratch_[static_cast<std::size_t>(cur)];
        if (!g_.forced[static_cast<std::size_t>(v)]) consider(-own_cost - own, Action::Unselect, -1);
        if (members(cur).size() > 1) consider(-own, Action::Singleton, -1);
        for (int c : touched)
          if (c != cur && !conflicts(v, c)) consider(scratch_[static_cast<std::size_t>(c)] - own, Action::Join, c);
      } else {
        consider(own_cost, Action::Singleton, -1);
        for (int c : touched)
          if (!conflicts(v, c)) consider(own_cost + scratch_[static_cast<std::size_t>(c)], Action::Join, c);
      }
      for (int c : touched) scratch_[static_cast<std::size_t>(c)] = 0.0;

      if (action == Action::None) continue;
      const bool toggles = action == Action::Unselect || cur == Solution::kUnselected;
      if (cur != Solution::kUnselected) remove_from_cluster(v);
      if (action == Action::Singleton) add_to(v, new_cluster());
      if (action == Action::Join) add_to(v, target);
      record(toggles ? MoveKind::ToggleSelection : MoveKind::MoveNode, best);
      improved = true;
    }
    return improved;
  }

  double weight_between(int v, const std::map<int, int>& side, int which) const {
    double sum = 0.0;
    for (const auto& [u, cost] : adj_[static_cast<std::size_t>(v)]) {
      auto it = side.find(u);
      if (it != side.end() && it->second == which && u != v) sum += cost;
    }
    return sum;
  }

  /// Bipartition of each cluster seeded at its most repulsive internal edge,
  /// grown breadth-first and refined by single-node flips; applied when the
  /// internal cut carries positive total cost.
  bool split_pass() {
    bool improved = false;
    const int live = static_cast<int>(members_.size());
    for (int c = 0; c < live && budget_left(); ++c) {
      if (members(c).size() < 2) continue;
      int seed_a = -1, seed_b = -1;
      double worst = kEps;
      auto sorted = members(c);
      std::sort(sorted.begin(), sorted.end());
      for (int v : sorted)
        for (const auto& [u, cost] : adj_[static_cast<std::size_t>(v)])
          if (v < u && label(u) == c && cost > worst) {
            worst = cost;
            seed_a = v;
            seed_b = u;
          }
      if (seed_a < 0) continue;

      std::map<int, int> side{{seed_a, 0}, {seed_b, 1}};
      std::queue<int> frontier;
      std::set<int> queued{seed_a, seed_b};
      auto enqueue_neighbors = [&](int v) {
        for (const auto& [u, cost] : adj_[static_cast<std::size_t>(v)])
          if (label(u) == c && queued.insert(u).second) frontier.push(u);
      };
      enqueue_neighbors(seed_a);
      enqueue_neighbors(seed_b);
      while (!frontier.empty()) {
        const int v = frontier.front();
        frontier.pop();
        // Join the side this node is most attracted to.
        side[v] = weight_between(v, side, 0) <= weight_between(v, side, 1) ? 0 : 1;
        enqueue_neighbors(v);
      }
      for (int pass = 0; pass < 4; ++pass) {
        bool flipped = false;
        for (int v : sorted) {
          const int s = side[v];
          const double gain = weight_between(v, side, s) - weight_between(v, side, 1 - s);
          if (gain > kEps && std::count_if(side.begin(), side.end(), [s](const auto& kv) {
                               return kv.second == s;
                             }) > 1) {
            side[v] = 1 - s;
            flipped = true;
          }
        }
        if (!flipped) break;
      }
      double cut = 0.0;
      for (int v : sorted)
        for (const auto& [u, cost] : adj_[static_cast<std::size_t>(v)])
          if (v < u && label(u) == c && side[v] != side[u]) cut += cost;
      if (cut <= kEps) continue;

      const int fresh = new_cluster();
      std::vector<int> stay, leave;
      for (int v : sorted) (side[v] == 0 ? stay : leave).push_back(v);
      members(c) = stay;
      for (int v : leave) label(v) = fresh;
      members(fresh) = leave;
      split_components(c);
      split_components(fresh);
      record(MoveKind::SplitCluster, -cut);
      improved = true;
    }
    return improved;
  }

  /// Deselects whole clusters whose retained cost is positive.
  bool drop_pass() {
    bool improved = false;
    const int live = static_cast<int>(members_.size());
    for (int c = 0; c < live && budget_left(); ++c) {
      if (members(c).empty()) continue;
      double total = 0.0;
      bool forced = false;
      for (int v : members(c)) {
        forced = forced || g_.forced[static_cast<std::size_t>(v)];
        total += g_.cost[static_cast<std::size_t>(v)];
        for (const auto& [u, cost] : adj_[static_cast<std::size_t>(v)])
          if (v < u && label(u) == c) total += cost;
      }
      if (forced || total <= kEps) continue;
      for (int v : members(c)) label(v) = Solution::kUnselected;
      members(c).clear();
      free_ids_.push_back(c);
      record(MoveKind::ToggleSelection, -total);
      improved = true;
    }
    return improved;
  }

  const ConstrainedGraph& g_;
  const SolverParams& params_;
  MoveLog* log_;
  std::mt19937_64 rng_;
  std::vector<std::vector<std::pair<int, double>>> adj_;
  std::vector<std::vector<int>> cut_adj_;
  std::vector<int> label_;
  std::vector<std::vector<int>> members_;
  std::vector<int> free_ids_;
  std::vector<double> scratch_;
  std::int64_t accepted_ = 0;
};

}  // namespace

Solution solve_local_search(const ProblemGraph& graph, const SolverParams& params, MoveLog* log) {
  params.check();
  const ConstrainedGraph contracted = apply_constraints(graph);
  LocalSearch search(contracted, params, log);
  const auto super_labels = search.run();
  return contracted.expand(super_labels);
}

Solution solve_best_of_seeds(const ProblemGraph& graph, const SolverParams& params, int seeds) {
  if (seeds < 1) throw ConfigError("seed count must be at least 1");
  Solution best;
  double best_objective = std::numeric_limits<double>::infinity();
  for (int k = 0; k < seeds; ++k) {
    SolverParams p = params;
    p.seed = params.seed + static_cast<std::uint64_t>(k);
    Solution s = solve_local_search(graph, p);
    const double obj = objective(graph, s);
    if (obj < best_objective - kEps) {
      best_objective = obj;
      best = std::move(s);
    }
  }
  return best;
}

}  // namespace arttrack
