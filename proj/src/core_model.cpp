#include "arttrack/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

#include "arttrack/errors.hpp"
#include "disjoint_sets.hpp"

namespace arttrack {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// ---------------------------------------------------------------------------
// PartVocabulary

PartVocabulary::PartVocabulary(std::vector<std::string> names,
                               std::optional<std::pair<std::string, std::string>> root_pair) {
  parts_.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].empty()) throw StructuralError("part names must be non-empty");
    for (const auto& earlier : parts_)
      if (earlier.name == names[i]) throw StructuralError("duplicate part name '" + names[i] + "'");
    parts_.push_back({static_cast<int>(i), std::move(names[i]), false});
  }
  if (root_pair) {
    const int anchor = require(root_pair->first);
    const int secondary = require(root_pair->second);
    if (anchor == secondary) throw StructuralError("root pair must name two distinct parts");
    parts_[static_cast<std::size_t>(anchor)].is_root = true;
    parts_[static_cast<std::size_t>(secondary)].is_root = true;
    roots_ = std::make_pair(anchor, secondary);
  }
}

PartVocabulary PartVocabulary::standard14() {
  return PartVocabulary({"r_ankle", "r_knee", "r_hip", "l_hip", "l_knee", "l_ankle", "r_wrist",
                         "r_elbow", "r_shoulder", "l_shoulder", "l_elbow", "l_wrist", "neck",
                         "head_top"},
                        std::make_pair(std::string("neck"), std::string("head_top")));
}

PartVocabulary PartVocabulary::generic(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("p" + std::to_string(i));
  return PartVocabulary(std::move(names));
}

std::optional<int> PartVocabulary::find(std::string_view name) const {
  for (const auto& p : parts_)
    if (p.name == name) return p.id;
  return std::nullopt;
}

int PartVocabulary::require(std::string_view name) const {
  if (auto id = find(name)) return *id;
  throw StructuralError("unknown part type '" + std::string(name) + "'");
}

bool PartVocabulary::is_root(int id) const {
  return id >= 0 && id < size() && parts_[static_cast<std::size_t>(id)].is_root;
}

std::optional<int> PartVocabulary::anchor_root() const {
  if (!roots_) return std::nullopt;
  return roots_->first;
}

std::optional<int> PartVocabulary::secondary_root() const {
  if (!roots_) return std::nullopt;
  return roots_->second;
}

bool operator==(const PartVocabulary& a, const PartVocabulary& b) {
  if (a.parts_.size() != b.parts_.size() || a.roots_ != b.roots_) return false;
  for (std::size_t i = 0; i < a.parts_.size(); ++i)
    if (a.parts_[i].name != b.parts_[i].name) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Costs

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::CrossType: return "cross_type";
    case EdgeKind::SameType: return "same_type";
    case EdgeKind::Temporal: return "temporal";
    case EdgeKind::RootAttachment: return "root_attachment";
  }
  return "?";
}

EdgeKind edge_kind_from_string(std::string_view name) {
  for (auto k : {EdgeKind::CrossType, EdgeKind::SameType, EdgeKind::Temporal,
                 EdgeKind::RootAttachment})
    if (to_string(k) == name) return k;
  throw StructuralError("unknown edge kind '" + std::string(name) + "'");
}

double log_odds(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream os;
    os << "probability " << p << " outside the open interval (0, 1)";
    throw DomainError(os.str());
  }
  return std::log(p) - std::log1p(-p);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double node_cost(double score, CostConvention convention) {
  const double lo = log_odds(score);
  return convention == CostConvention::Negated ? -lo : lo;
}

// ---------------------------------------------------------------------------
// ProblemGraph

namespace {

NodePair ordered(NodePair p) {
  if (p.first > p.second) std::swap(p.first, p.second);
  return p;
}

std::string pair_text(NodePair p) {
  return "(" + std::to_string(p.first) + ", " + std::to_string(p.second) + ")";
}

void check_kind(const PartVocabulary& parts, const Detection& a, const Detection& b, const Edge& e) {
  auto fail = [&](const char* what) {
    throw StructuralError(std::string(to_string(e.kind)) + " edge " + pair_text({e.u, e.v}) + " " +
                          what);
  };
  switch (e.kind) {
    case EdgeKind::CrossType:
      if (a.frame != b.frame) fail("must connect detections of the same frame");
      if (a.part == b.part) fail("must connect different part types");
      break;
    case EdgeKind::SameType:
      if (a.frame != b.frame) fail("must connect detections of the same frame");
      if (a.part != b.part) fail("must connect equal part types");
      break;
    case EdgeKind::Temporal:
      if (std::abs(a.frame - b.frame) != 1) fail("must connect adjacent frames");
      if (a.part != b.part) fail("must connect equal part types");
      break;
    case EdgeKind::RootAttachment: {
      if (a.frame != b.frame) fail("must connect detections of the same frame");
      const auto anchor = parts.anchor_root();
      if (!anchor) fail("requires a configured root pair");
      if ((a.part == *anchor) == (b.part == *anchor))
        fail("must connect exactly one person node to a proposal");
      break;
    }
  }
}

}  // namespace

ProblemGraph::ProblemGraph(PartVocabulary parts, std::vector<Detection> detections,
                           std::vector<Edge> edges, std::vector<double> node_costs,
                           std::vector<NodePair> must_link, std::vector<NodePair> must_cut)
    : parts_(std::move(parts)),
      detections_(std::move(detections)),
      edges_(std::move(edges)),
      node_costs_(std::move(node_costs)),
      must_link_(std::move(must_link)),
      must_cut_(std::move(must_cut)) {
  const auto n = static_cast<NodeIndex>(detections_.size());
  if (node_costs_.size() != detections_.size())
    throw StructuralError("node cost count does not match detection count");
  for (const auto& d : detections_) {
    if (d.frame < 0) throw StructuralError("negative frame index");
    if (d.part < 0 || d.part >= parts_.size())
      throw StructuralError("detection " + std::to_string(d.node_id) + " has unknown part type");
    if (!std::isfinite(d.pos.x) || !std::isfinite(d.pos.y))
      throw StructuralError("detection " + std::to_string(d.node_id) + " has non-finite position");
  }
  for (double c : node_costs_)
    if (!std::isfinite(c)) throw StructuralError("non-finite node cost");

  std::set<NodePair> seen;
  for (auto& e : edges_) {
    if (e.u == e.v) throw StructuralError("self-loop at node " + std::to_string(e.u));
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n)
      throw StructuralError("edge " + pair_text({e.u, e.v}) + " references a missing node");
    if (e.u > e.v) std::swap(e.u, e.v);
    if (!std::isfinite(e.cost)) throw StructuralError("non-finite edge cost");
    if (!seen.insert({e.u, e.v}).second)
      throw StructuralError("duplicate edge " + pair_text({e.u, e.v}));
    check_kind(parts_, detections_[static_cast<std::size_t>(e.u)],
               detections_[static_cast<std::size_t>(e.v)], e);
  }

  auto normalize = [n](std::vector<NodePair>& pairs, const char* what) {
    for (auto& p : pairs) {
      if (p.first < 0 || p.second < 0 || p.first >= n || p.second >= n)
        throw StructuralError(std::string(what) + " pair " + pair_text(p) +
                              " references a missing node");
      if (p.first == p.second)
        throw StructuralError(std::string(what) + " pair " + pair_text(p) + " is a self-pair");
      p = ordered(p);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  };
  normalize(must_link_, "must_link");
  normalize(must_cut_, "must_cut");
  for (const auto& p : must_link_)
    if (std::binary_search(must_cut_.begin(), must_cut_.end(), p))
      throw StructuralError("pair " + pair_text(p) + " is both must_link and must_cut");

  // Compressed adjacency, neighbors ascending.
  std::vector<std::size_t> degree(detections_.size() + 1, 0);
  for (const auto& e : edges_) {
    ++degree[static_cast<std::size_t>(e.u)];
    ++degree[static_cast<std::size_t>(e.v)];
  }
  adjacency_offsets_.assign(detections_.size() + 1, 0);
  for (std::size_t i = 0; i < detections_.size(); ++i)
    adjacency_offsets_[i + 1] = adjacency_offsets_[i] + degree[i];
  adjacency_.resize(adjacency_offsets_.back());
  std::vector<std::size_t> fill(adjacency_offsets_.begin(), adjacency_offsets_.end() - 1);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    adjacency_[fill[static_cast<std::size_t>(e.u)]++] = {e.v, k};
    adjacency_[fill[static_cast<std::size_t>(e.v)]++] = {e.u, k};
  }
  for (std::size_t i = 0; i < detections_.size(); ++i)
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(adjacency_offsets_[i]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(adjacency_offsets_[i + 1]),
              [](const Incidence& a, const Incidence& b) { return a.neighbor < b.neighbor; });
}

ProblemGraph ProblemGraph::untyped(std::vector<double> node_costs,
                                   const std::vector<std::tuple<NodeIndex, NodeIndex, double>>& edges,
                                   std::vector<NodePair> must_link, std::vector<NodePair> must_cut) {
  const auto n = static_cast<int>(node_costs.size());
  std::vector<Detection> dets(node_costs.size());
  for (int i = 0; i < n; ++i) dets[static_cast<std::size_t>(i)] = {i, 0, {double(i), 0.0}, 0.5, i};
  std::vector<Edge> es;
  es.reserve(edges.size());
  for (const auto& [u, v, c] : edges) es.push_back({u, v, EdgeKind::CrossType, c});
  return ProblemGraph(PartVocabulary::generic(n), std::move(dets), std::move(es),
                      std::move(node_costs), std::move(must_link), std::move(must_cut));
}

std::span<const Incidence> ProblemGraph::neighbors(NodeIndex i) const {
  const auto k = static_cast<std::size_t>(i);
  return {adjacency_.data() + adjacency_offsets_.at(k), adjacency_offsets_.at(k + 1) - adjacency_offsets_[k]};
}

std::optional<std::size_t> ProblemGraph::find_edge(NodeIndex a, NodeIndex b) const {
  if (a < 0 || b < 0 || a >= size() || b >= size()) return std::nullopt;
  auto nb = neighbors(a);
  auto it = std::lower_bound(nb.begin(), nb.end(), b,
                             [](const Incidence& inc, NodeIndex x) { return inc.neighbor < x; });
  if (it != nb.end() && it->neighbor == b) return it->edge;
  return std::nullopt;
}

std::optional<NodeIndex> ProblemGraph::index_of(std::int64_t node_id) const {
  for (std::size_t i = 0; i < detections_.size(); ++i)
    if (detections_[i].node_id == node_id) return static_cast<NodeIndex>(i);
  return std::nullopt;
}

std::size_t ProblemGraph::count_edges(EdgeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(edges_.begin(), edges_.end(), [kind](const Edge& e) { return e.kind == kind; }));
}

// ---------------------------------------------------------------------------
// Solution

std::vector<NodeIndex> Solution::selected_nodes() const {
  std::vector<NodeIndex> out;
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] != kUnselected) out.push_back(static_cast<NodeIndex>(i));
  return out;
}

std::vector<std::vector<NodeIndex>> Solution::clusters() const {
  std::map<int, std::size_t> slot;
  std::vector<std::vector<NodeIndex>> out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == kUnselected) continue;
    auto [it, fresh] = slot.try_emplace(labels_[i], out.size());
    if (fresh) out.emplace_back();
    out[it->second].push_back(static_cast<NodeIndex>(i));
  }
  return out;
}

Solution Solution::canonical() const {
  std::vector<int> relabeled(labels_.size(), kUnselected);
  std::unordered_map<int, int> remap;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == kUnselected) continue;
    auto [it, fresh] = remap.try_emplace(labels_[i], static_cast<int>(remap.size()));
    relabeled[i] = it->second;
  }
  return Solution(std::move(relabeled));
}

std::string Solution::encode() const {
  std::string out;
  bool first_cluster = true;
  for (const auto& c : clusters()) {
    if (!first_cluster) out += '|';
    first_cluster = false;
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(c[k]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Objective and validation

namespace {

void require_size(const ProblemGraph& graph, const Solution& sol) {
  if (sol.size() != static_cast<std::size_t>(graph.size()))
    throw StructuralError("solution covers " + std::to_string(sol.size()) + " nodes, graph has " +
                          std::to_string(graph.size()));
}

bool joined(const Solution& sol, const Edge& e) {
  return sol.selected(e.u) && sol.cluster_of(e.u) == sol.cluster_of(e.v);
}

}  // namespace

double objective(const ProblemGraph& graph, const Solution& sol) {
  require_size(graph, sol);
  double total = 0.0;
  for (NodeIndex i = 0; i < graph.size(); ++i)
    if (sol.selected(i)) total += graph.node_cost(i);
  for (const auto& e : graph.edges())
    if (joined(sol, e)) total += e.cost;
  return total;
}

std::vector<std::uint8_t> node_labels(const ProblemGraph& graph, const Solution& sol) {
  require_size(graph, sol);
  std::vector<std::uint8_t> x(sol.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = sol.selected(static_cast<NodeIndex>(i)) ? 1 : 0;
  return x;
}

std::vector<std::uint8_t> edge_labels(const ProblemGraph& graph, const Solution& sol) {
  require_size(graph, sol);
  std::vector<std::uint8_t> y(graph.edges().size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = joined(sol, graph.edges()[k]) ? 1 : 0;
  return y;
}

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::SizeMismatch: return "size_mismatch";
    case Violation::Kind::JoinedUnselected: return "joined_unselected";
    case Violation::Kind::CycleInconsistent: return "cycle_inconsistent";
    case Violation::Kind::DisconnectedCluster: return "disconnected_cluster";
    case Violation::Kind::MustLinkSplit: return "must_link_split";
    case Violation::Kind::MustLinkUnselected: return "must_link_unselected";
    case Violation::Kind::MustCutJoined: return "must_cut_joined";
  }
  return "?";
}

namespace {

void check_pair_constraints(const ProblemGraph& graph, std::span<const std::uint8_t> x,
                            const std::function<bool(NodeIndex, NodeIndex)>& same_component,
                            std::vector<Violation>& out) {
  for (const auto& [a, b] : graph.must_link()) {
    if (!x[static_cast<std::size_t>(a)] || !x[static_cast<std::size_t>(b)])
      out.push_back({Violation::Kind::MustLinkUnselected, {a, b},
                     "must_link pair " + pair_text({a, b}) + " is not fully selected"});
    else if (!same_component(a, b))
      out.push_back({Violation::Kind::MustLinkSplit, {a, b},
                     "must_link pair " + pair_text({a, b}) + " is in different clusters"});
  }
  for (const auto& [a, b] : graph.must_cut())
    if (x[static_cast<std::size_t>(a)] && x[static_cast<std::size_t>(b)] && same_component(a, b))
      out.push_back({Violation::Kind::MustCutJoined, {a, b},
                     "must_cut pair " + pair_text({a, b}) + " shares a cluster"});
}

}  // namespace

std::vector<Violation> validate(const ProblemGraph& graph, const Solution& sol) {
  std::vector<Violation> out;
  if (sol.size() != static_cast<std::size_t>(graph.size())) {
    out.push_back({Violation::Kind::SizeMismatch, {},
                   "solution covers " + std::to_string(sol.size()) + " nodes, graph has " +
                       std::to_string(graph.size())});
    return out;
  }
  // Each cluster must be one connected component of the joined subgraph.
  for (const auto& members : sol.clusters()) {
    std::set<NodeIndex> reached{members.front()};
    std::queue<NodeIndex> frontier;
    frontier.push(members.front());
    const int label = sol.cluster_of(members.front());
    while (!frontier.empty()) {
      const NodeIndex u = frontier.front();
      frontier.pop();
      for (const auto& inc : graph.neighbors(u))
        if (sol.cluster_of(inc.neighbor) == label && reached.insert(inc.neighbor).second)
          frontier.push(inc.neighbor);
    }
    if (reached.size() != members.size()) {
      std::vector<NodeIndex> stranded;
      for (NodeIndex m : members)
        if (!reached.count(m)) stranded.push_back(m);
      out.push_back({Violation::Kind::DisconnectedCluster, stranded,
                     "cluster containing node " + std::to_string(members.front()) +
                         " is not connected by joined edges"});
    }
  }
  const auto x = node_labels(graph, sol);
  check_pair_constraints(
      graph, x, [&](NodeIndex a, NodeIndex b) { return sol.cluster_of(a) == sol.cluster_of(b); },
      out);
  return out;
}

std::vector<Violation> validate_labeling(const ProblemGraph& graph, std::span<const std::uint8_t> x,
                                         std::span<const std::uint8_t> y) {
  std::vector<Violation> out;
  if (x.size() != static_cast<std::size_t>(graph.size()) || y.size() != graph.edges().size()) {
    out.push_back({Violation::Kind::SizeMismatch, {}, "labeling size does not match graph"});
    return out;
  }
  detail::DisjointSets components(x.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    const auto& e = graph.edges()[k];
    if (!y[k]) continue;
    if (!x[static_cast<std::size_t>(e.u)] || !x[static_cast<std::size_t>(e.v)])
      out.push_back({Violation::Kind::JoinedUnselected, {e.u, e.v},
                     "edge " + pair_text({e.u, e.v}) + " is joined but an endpoint is unselected"});
    components.unite(static_cast<std::size_t>(e.u), static_cast<std::size_t>(e.v));
  }
  // A cut edge inside a joined component closes a cycle with exactly one cut.
  for (std::size_t k = 0; k < y.size(); ++k) {
    const auto& e = graph.edges()[k];
    if (!y[k] && components.find(static_cast<std::size_t>(e.u)) ==
                     components.find(static_cast<std::size_t>(e.v)))
      out.push_back({Violation::Kind::CycleInconsistent, {e.u, e.v},
                     "edge " + pair_text({e.u, e.v}) +
                         " is cut but its endpoints are joined by a path"});
  }
  check_pair_constraints(
      graph, x,
      [&](NodeIndex a, NodeIndex b) {
        return components.find(static_cast<std::size_t>(a)) ==
               components.find(static_cast<std::size_t>(b));
      },
      out);
  return out;
}

}  // namespace arttrack
