#pragma once

// Problem instance and solution representation for minimum cost subgraph
// multicut over body-part proposals.
//
// A ProblemGraph addresses its nodes by dense index 0..n-1. Each node carries
// the Detection it was built from; Detection::node_id is the external id used
// by input files and need not be contiguous.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace arttrack {

using NodeIndex = std::int32_t;
using NodePair = std::pair<NodeIndex, NodeIndex>;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

struct PartType {
  int id = 0;
  std::string name;
  bool is_root = false;
};

/// Ordered set of body part types. At most one root pair may be configured;
/// the first root (the anchor) is the "person node" type of the top-down
/// model, the second is the other head part.
class PartVocabulary {
 public:
  PartVocabulary() = default;
  PartVocabulary(std::vector<std::string> names,
                 std::optional<std::pair<std::string, std::string>> root_pair = std::nullopt);

  /// The 14-joint skeleton (ankles, knees, hips, wrists, elbows, shoulders,
  /// neck, head top) with (neck, head_top) as roots.
  static PartVocabulary standard14();
  /// Parts named p0..p{n-1}, no roots.
  static PartVocabulary generic(int n);

  int size() const { return static_cast<int>(parts_.size()); }
  bool empty() const { return parts_.empty(); }
  const PartType& operator[](int id) const { return parts_.at(static_cast<std::size_t>(id)); }
  const std::vector<PartType>& parts() const { return parts_; }

  std::optional<int> find(std::string_view name) const;
  /// Like find() but throws StructuralError on unknown names.
  int require(std::string_view name) const;

  bool is_root(int id) const;
  bool has_roots() const { return roots_.has_value(); }
  std::optional<int> anchor_root() const;
  std::optional<int> secondary_root() const;

  friend bool operator==(const PartVocabulary&, const PartVocabulary&);

 private:
  std::vector<PartType> parts_;
  std::optional<std::pair<int, int>> roots_;
};

/// One body-part proposal.
struct Detection {
  std::int64_t node_id = 0;
  int frame = 0;
  Point pos;
  double score = 0.5;  // strictly inside (0, 1)
  int part = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

enum class EdgeKind { CrossType, SameType, Temporal, RootAttachment };

std::string_view to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(std::string_view name);

struct Edge {
  NodeIndex u = 0;  // u < v after graph construction
  NodeIndex v = 0;
  EdgeKind kind = EdgeKind::CrossType;
  double cost = 0.0;
};

/// Orientation of the log-odds costs. Negated: confident detections and
/// likely joins get negative (rewarded) cost under minimization. Literal:
/// the log-ratio exactly as printed, kept for comparison runs.
enum class CostConvention { Negated, Literal };

/// log(p / (1 - p)); throws DomainError unless p is in (0, 1).
double log_odds(double p);
/// Inverse of log_odds.
double sigmoid(double z);

/// Cost of retaining a detection with the given score.
double node_cost(double score, CostConvention convention = CostConvention::Negated);

struct Incidence {
  NodeIndex neighbor;
  std::size_t edge;
};

/// Immutable problem instance: detections, typed weighted edges, per-node
/// costs and must-link / must-cut pairs. The constructor canonicalizes edge
/// endpoints and constraint pairs and throws StructuralError when an
/// invariant is broken.
class ProblemGraph {
 public:
  ProblemGraph() = default;
  ProblemGraph(PartVocabulary parts, std::vector<Detection> detections, std::vector<Edge> edges,
               std::vector<double> node_costs, std::vector<NodePair> must_link = {},
               std::vector<NodePair> must_cut = {});

  /// Untyped instance for solver work: every node is its own part type in
  /// frame 0 and every edge is CrossType.
  static ProblemGraph untyped(std::vector<double> node_costs,
                              const std::vector<std::tuple<NodeIndex, NodeIndex, double>>& edges,
                              std::vector<NodePair> must_link = {},
                              std::vector<NodePair> must_cut = {});

  NodeIndex size() const { return static_cast<NodeIndex>(detections_.size()); }
  const PartVocabulary& parts() const { return parts_; }
  const std::vector<Detection>& detections() const { return detections_; }
  const Detection& detection(NodeIndex i) const { return detections_.at(static_cast<std::size_t>(i)); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<double>& node_costs() const { return node_costs_; }
  double node_cost(NodeIndex i) const { return node_costs_.at(static_cast<std::size_t>(i)); }
  const std::vector<NodePair>& must_link() const { return must_link_; }
  const std::vector<NodePair>& must_cut() const { return must_cut_; }

  std::span<const Incidence> neighbors(NodeIndex i) const;
  std::optional<std::size_t> find_edge(NodeIndex a, NodeIndex b) const;
  std::optional<NodeIndex> index_of(std::int64_t node_id) const;

  std::size_t count_edges(EdgeKind kind) const;

 private:
  PartVocabulary parts_;
  std::vector<Detection> detections_;
  std::vector<Edge> edges_;
  std::vector<double> node_costs_;
  std::vector<NodePair> must_link_;
  std::vector<NodePair> must_cut_;
  std::vector<std::size_t> adjacency_offsets_;
  std::vector<Incidence> adjacency_;
};

/// Selected nodes and their partition into clusters. Stored as one label per
/// node; kUnselected marks nodes outside the subgraph.
class Solution {
 public:
  static constexpr int kUnselected = -1;

  Solution() = default;
  explicit Solution(std::size_t node_count) : labels_(node_count, kUnselected) {}
  explicit Solution(std::vector<int> labels) : labels_(std::move(labels)) {}

  std::size_t size() const { return labels_.size(); }
  bool selected(NodeIndex i) const { return label(i) != kUnselected; }
  int cluster_of(NodeIndex i) const { return label(i); }
  const std::vector<int>& labels() const { return labels_; }

  void assign(NodeIndex i, int cluster) { labels_.at(static_cast<std::size_t>(i)) = cluster; }

  std::vector<NodeIndex> selected_nodes() const;
  /// Clusters ordered by smallest member, members ascending.
  std::vector<std::vector<NodeIndex>> clusters() const;
  /// Clusters renumbered 0, 1, ... in order of their smallest member.
  Solution canonical() const;
  /// Text form of the canonical partition, e.g. "0,1|3|5,6".
  std::string encode() const;

  friend bool operator==(const Solution&, const Solution&) = default;

 private:
  int label(NodeIndex i) const { return labels_.at(static_cast<std::size_t>(i)); }
  std::vector<int> labels_;
};

/// Sum of retained node costs plus costs of joined edges (both endpoints
/// selected and in the same cluster).
double objective(const ProblemGraph& graph, const Solution& sol);

/// Derived node indicators x (1 = selected).
std::vector<std::uint8_t> node_labels(const ProblemGraph& graph, const Solution& sol);
/// Derived edge indicators y (1 = joined), aligned with graph.edges().
std::vector<std::uint8_t> edge_labels(const ProblemGraph& graph, const Solution& sol);

struct Violation {
  enum class Kind {
    SizeMismatch,
    JoinedUnselected,    // y_vw = 1 while x_v = 0 or x_w = 0
    CycleInconsistent,   // a cut edge whose endpoints are joined by a path
    DisconnectedCluster,
    MustLinkSplit,
    MustLinkUnselected,
    MustCutJoined,
  };
  Kind kind;
  std::vector<NodeIndex> nodes;
  std::string message;
};

std::string_view to_string(Violation::Kind kind);

/// Reports every broken constraint of a partition-form solution.
std::vector<Violation> validate(const ProblemGraph& graph, const Solution& sol);

/// Same checks for a raw (x, y) labeling that need not come from a partition.
std::vector<Violation> validate_labeling(const ProblemGraph& graph, std::span<const std::uint8_t> x,
                                         std::span<const std::uint8_t> y);

}  // namespace arttrack
