#include "arttrack/graph_builder.hpp"

#include <algorithm>
#include <cmath>

#include "arttrack/errors.hpp"

namespace arttrack {

SparsityPattern SparsityPattern::all_pairs() {
  SparsityPattern p;
  p.full = true;
  return p;
}

SparsityPattern SparsityPattern::kinematic_tree(const PartVocabulary& parts) {
  static const std::vector<std::pair<std::string, std::string>> tree{
      {"head_top", "neck"},       {"neck", "r_shoulder"},   {"neck", "l_shoulder"},
      {"r_shoulder", "r_elbow"},  {"l_shoulder", "l_elbow"}, {"r_elbow", "r_wrist"},
      {"l_elbow", "l_wrist"},     {"neck", "r_hip"},        {"neck", "l_hip"},
      {"r_hip", "r_knee"},        {"l_hip", "l_knee"},      {"r_knee", "r_ankle"},
      {"l_knee", "l_ankle"},
  };
  return from_names(parts, tree);
}

SparsityPattern SparsityPattern::from_names(const PartVocabulary& parts,
                                            const std::vector<std::pair<std::string, std::string>>& names) {
  SparsityPattern p;
  for (const auto& [a, b] : names) {
    const auto ia = parts.find(a);
    const auto ib = parts.find(b);
    if (!ia || !ib) throw ConfigError("sparsity pattern names unknown part '" + (ia ? b : a) + "'");
    if (*ia == *ib) throw ConfigError("sparsity pattern pairs part '" + a + "' with itself");
    p.pairs.insert(std::minmax(*ia, *ib));
  }
  return p;
}

bool SparsityPattern::allows(int a, int b) const {
  if (a == b) return false;
  return full || pairs.count(std::minmax(a, b)) > 0;
}

std::vector<std::pair<int, int>> SparsityPattern::expand(const PartVocabulary& parts) const {
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < parts.size(); ++a)
    for (int b = a + 1; b < parts.size(); ++b)
      if (allows(a, b)) out.emplace_back(a, b);
  return out;
}

void SparsityPattern::check(const PartVocabulary& parts) const {
  for (const auto& [a, b] : pairs)
    if (a < 0 || b >= parts.size() || a >= b) throw ConfigError("sparsity pattern references unknown part type");
}

double edge_cost_from_probability(double p, CostConvention convention) {
  return edge_cost_from_decision(log_odds(p), convention);
}

double edge_cost_from_decision(double logit, CostConvention convention) {
  if (!std::isfinite(logit)) throw DomainError("non-finite edge logit");
  return convention == CostConvention::Negated ? -logit : logit;
}

// ---------------------------------------------------------------------------

namespace {

double angle_between(Point u, Point v) {
  const double nu = std::hypot(u.x, u.y);
  const double nv = std::hypot(v.x, v.y);
  if (nu < 1e-9 || nv < 1e-9) return 0.0;
  return std::atan2(std::abs(u.x * v.y - u.y * v.x), u.x * v.x + u.y * v.y);
}

EdgeFeatureVector cross_vector(double fo, double fa, double bo, double ba) {
  return {std::string(kCrossTypeSchema), {"fwd_offset", "fwd_angle", "bwd_offset", "bwd_angle"}, {fo, fa, bo, ba}};
}

}  // namespace

EdgeFeatureVector cross_type_features(const Detection& a, const Detection& b, const CrossTypeModel& model) {
  const bool ordered = a.part == model.part_a && b.part == model.part_b;
  if (!ordered && !(b.part == model.part_a && a.part == model.part_b))
    throw StructuralError("cross-type model does not cover these part types");
  const Detection& from = ordered ? a : b;
  const Detection& to = ordered ? b : a;
  const Point off = model.offset;
  // Forward: from + offset predicts to. Backward: to - offset predicts from.
  const Point predicted_to{from.pos.x + off.x, from.pos.y + off.y};
  const Point predicted_from{to.pos.x - off.x, to.pos.y - off.y};
  const Point actual{to.pos.x - from.pos.x, to.pos.y - from.pos.y};
  const Point back{from.pos.x - to.pos.x, from.pos.y - to.pos.y};
  return cross_vector(distance(predicted_to, to.pos), angle_between(actual, off),
                      distance(predicted_from, from.pos), angle_between(back, Point{-off.x, -off.y}));
}

double cross_type_cost(const EdgeFeatureVector& features, const LogisticModel& model, CostConvention convention) {
  if (features.schema != model.schema())
    throw StructuralError("feature schema '" + features.schema + "' does not match model '" + model.schema() + "'");
  return edge_cost_from_decision(model.decision(features.values), convention);
}

LogisticModel default_same_type_model(double crossover) {
  if (!(crossover > 0)) throw ConfigError("same-type crossover must be positive");
  const double k = 4.0 / crossover;
  return LogisticModel(std::string(kSameTypeSchema), {"distance"}, {-k, k * crossover});
}

double same_type_cost(double distance, const LogisticModel& model, CostConvention convention) {
  if (!(distance >= 0)) throw DomainError("distance must be non-negative");
  if (model.schema() != kSameTypeSchema) throw StructuralError("not a same-type model: '" + model.schema() + "'");
  const double f[1] = {distance};
  return edge_cost_from_decision(model.decision(f), convention);
}

TemporalModel default_temporal_model(double crossover) {
  if (!(crossover > 0)) throw ConfigError("temporal crossover must be positive");
  const double k = 4.0 / crossover;
  TemporalModel m;
  m.features = FeatureSet{true, false, false};
  m.logistic = LogisticModel(std::string(kTemporalSchema) + ":l2", {"l2"}, {-k, k * crossover});
  return m;
}

const CrossTypeModel* CostModels::find_cross(int a, int b) const {
  const auto [lo, hi] = std::minmax(a, b);
  const auto it = std::lower_bound(cross_type.begin(), cross_type.end(), std::make_pair(lo, hi),
                                   [](const CrossTypeModel& m, const std::pair<int, int>& key) {
                                     return std::make_pair(m.part_a, m.part_b) < key;
                                   });
  if (it == cross_type.end() || it->part_a != lo || it->part_b != hi) return nullptr;
  return &*it;
}

void CostModels::normalize() {
  for (const auto& m : cross_type)
    if (m.part_a >= m.part_b) throw StructuralError("cross-type model pair must be ordered low, high");
  std::sort(cross_type.begin(), cross_type.end(), [](const CrossTypeModel& x, const CrossTypeModel& y) {
    return std::make_pair(x.part_a, x.part_b) < std::make_pair(y.part_a, y.part_b);
  });
  for (std::size_t i = 1; i < cross_type.size(); ++i)
    if (cross_type[i].part_a == cross_type[i - 1].part_a && cross_type[i].part_b == cross_type[i - 1].part_b)
      throw StructuralError("duplicate cross-type model");
}

// ---------------------------------------------------------------------------

namespace {

struct Flat {
  std::vector<Detection> dets;
  std::vector<std::size_t> frame_start;  // size frames + 1
};

Flat flatten(const Sequence& seq) {
  seq.check();
  Flat f;
  f.frame_start.push_back(0);
  for (const auto& frame : seq.frames) {
    f.dets.insert(f.dets.end(), frame.begin(), frame.end());
    f.frame_start.push_back(f.dets.size());
  }
  return f;
}

double temporal_edge_cost(const Sequence& seq, const Detection& a, const Detection& b, const TemporalModel& model,
                          const BuildOptions& options) {
  const TemporalInputs inputs{seq.descriptor(a.node_id), seq.descriptor(b.node_id),
                              seq.correspondences_for(a.frame, FlowDirection::Forward),
                              seq.correspondences_for(a.frame, FlowDirection::Reverse)};
  const auto g = assemble_g(a, b, inputs, options.region, model.imputation);
  const auto f = select_features(g, model.features);
  if (f.schema != model.logistic.schema())
    throw ConfigError("temporal model expects '" + model.logistic.schema() + "' but features are '" + f.schema +
                      "'");
  return edge_cost_from_decision(model.logistic.decision(f.values), options.convention);
}

void add_same_type_and_temporal(const Sequence& seq, const Flat& flat, const CostModels& models,
                                const BuildOptions& options, std::vector<Edge>& edges) {
  for (std::size_t t = 0; t + 1 < flat.frame_start.size(); ++t) {
    const auto lo = flat.frame_start[t], hi = flat.frame_start[t + 1];
    for (auto i = lo; i < hi; ++i)
      for (auto j = i + 1; j < hi; ++j)
        if (flat.dets[i].part == flat.dets[j].part)
          edges.push_back({static_cast<NodeIndex>(i), static_cast<NodeIndex>(j), EdgeKind::SameType,
                           same_type_cost(distance(flat.dets[i].pos, flat.dets[j].pos), models.same_type,
                                          options.convention)});
  }
  if (!options.temporal || !models.temporal) return;
  if (!(options.temporal_gate >= 0)) throw ConfigError("temporal gate must be non-negative");
  for (std::size_t t = 0; t + 2 < flat.frame_start.size(); ++t) {
    for (auto i = flat.frame_start[t]; i < flat.frame_start[t + 1]; ++i)
      for (auto j = flat.frame_start[t + 1]; j < flat.frame_start[t + 2]; ++j) {
        const auto& a = flat.dets[i];
        const auto& b = flat.dets[j];
        if (a.part != b.part || distance(a.pos, b.pos) > options.temporal_gate) continue;
        edges.push_back({static_cast<NodeIndex>(i), static_cast<NodeIndex>(j), EdgeKind::Temporal,
                         temporal_edge_cost(seq, a, b, *models.temporal, options)});
      }
  }
}

}  // namespace

ProblemGraph build_bu(const Sequence& seq, const CostModels& models, const SparsityPattern& pattern,
                      const BuildOptions& options) {
  pattern.check(seq.parts);
  const Flat flat = flatten(seq);
  std::vector<double> costs;
  costs.reserve(flat.dets.size());
  for (const auto& d : flat.dets) costs.push_back(node_cost(d.score, options.convention));

  std::vector<Edge> edges;
  for (std::size_t t = 0; t + 1 < flat.frame_start.size(); ++t) {
    const auto lo = flat.frame_start[t], hi = flat.frame_start[t + 1];
    for (auto i = lo; i < hi; ++i)
      for (auto j = i + 1; j < hi; ++j) {
        const auto& a = flat.dets[i];
        const auto& b = flat.dets[j];
        if (!pattern.allows(a.part, b.part)) continue;
        const auto* model = models.find_cross(a.part, b.part);
        if (!model)
          throw ConfigError("no cross-type model for parts '" + seq.parts[std::min(a.part, b.part)].name + "' and '" +
                            seq.parts[std::max(a.part, b.part)].name + "'");
        edges.push_back({static_cast<NodeIndex>(i), static_cast<NodeIndex>(j), EdgeKind::CrossType,
                         cross_type_cost(cross_type_features(a, b, *model), model->logistic, options.convention)});
      }
  }
  add_same_type_and_temporal(seq, flat, models, options, edges);
  return ProblemGraph(seq.parts, flat.dets, std::move(edges), std::move(costs));
}

ProblemGraph build_tdbu(const Sequence& seq, const CostModels& models, const BuildOptions& options) {
  const auto anchor = seq.parts.anchor_root();
  if (!anchor) throw ConfigError("the TD/BU model needs a root pair in the part vocabulary");
  if (!std::isfinite(options.tdbu_unary)) throw ConfigError("TD/BU unary cost must be finite");
  const Flat flat = flatten(seq);
  std::map<std::int64_t, NodeIndex> index;
  for (std::size_t i = 0; i < flat.dets.size(); ++i) index[flat.dets[i].node_id] = static_cast<NodeIndex>(i);

  std::vector<Edge> edges;
  for (const auto& a : seq.attachments) {
    const NodeIndex r = index.at(a.root);
    const NodeIndex p = index.at(a.proposal);
    const auto& root = flat.dets[static_cast<std::size_t>(r)];
    const auto& prop = flat.dets[static_cast<std::size_t>(p)];
    if (root.part != *anchor)
      throw StructuralError("attachment root " + std::to_string(a.root) + " is not a '" + seq.parts[*anchor].name +
                            "' detection");
    if (prop.part == *anchor)
      throw StructuralError("attachment " + std::to_string(a.root) + " -> " + std::to_string(a.proposal) +
                            " joins two person nodes");
    edges.push_back({r, p, EdgeKind::RootAttachment, edge_cost_from_probability(a.p, options.convention)});
  }
  add_same_type_and_temporal(seq, flat, models, options, edges);

  std::vector<NodePair> must_cut;
  for (std::size_t t = 0; t + 1 < flat.frame_start.size(); ++t)
    for (auto i = flat.frame_start[t]; i < flat.frame_start[t + 1]; ++i)
      for (auto j = i + 1; j < flat.frame_start[t + 1]; ++j)
        if (flat.dets[i].part == *anchor && flat.dets[j].part == *anchor)
          must_cut.emplace_back(static_cast<NodeIndex>(i), static_cast<NodeIndex>(j));

  std::vector<double> costs(flat.dets.size(), options.tdbu_unary);
  return ProblemGraph(seq.parts, flat.dets, std::move(edges), std::move(costs), {}, std::move(must_cut));
}

Solution drop_rootless(const ProblemGraph& graph, const Solution& sol) {
  const auto anchor = graph.parts().anchor_root();
  Solution out = sol;
  for (const auto& cluster : sol.clusters()) {
    const bool rooted = anchor && std::any_of(cluster.begin(), cluster.end(), [&](NodeIndex i) {
                          return graph.detection(i).part == *anchor;
                        });
    if (!rooted)
      for (NodeIndex i : cluster) out.assign(i, Solution::kUnselected);
  }
  return out.canonical();
}

}  // namespace arttrack
