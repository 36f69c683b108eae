#include "arttrack/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

#include "arttrack/errors.hpp"
#include "disjoint_sets.hpp"

namespace arttrack {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

ProblemGraph build_variant(const Sequence& seq, const CostModels& models, const SequenceConfig& cfg) {
  switch (cfg.model) {
    case ModelVariant::BuFull:
      return build_bu(seq, models, SparsityPattern::all_pairs(), cfg.build);
    case ModelVariant::BuSparse:
      return build_bu(seq, models, cfg.pattern(seq.parts), cfg.build);
    case ModelVariant::TdBu:
      return build_tdbu(seq, models, cfg.build);
  }
  throw Error("unknown model variant");
}

// person -> frame -> members
using Grouped = std::map<int, std::map<int, std::vector<Detection>>>;

std::map<int, std::map<int, Pose>> reduce(const Grouped& grouped) {
  std::map<int, std::map<int, Pose>> out;
  for (const auto& [id, frames] : grouped)
    for (const auto& [t, members] : frames) {
      auto pose = extract_pose(members, t);
      if (!pose.empty()) out[id][t] = std::move(pose);
    }
  return out;
}

}  // namespace

std::string_view to_string(ModelVariant variant) {
  switch (variant) {
    case ModelVariant::BuFull: return "bu-full";
    case ModelVariant::BuSparse: return "bu-sparse";
    case ModelVariant::TdBu: return "tdbu";
  }
  return "?";
}

ModelVariant model_variant_from_string(std::string_view name) {
  for (auto v : {ModelVariant::BuFull, ModelVariant::BuSparse, ModelVariant::TdBu})
    if (to_string(v) == name) return v;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected bu-full, bu-sparse or tdbu)");
}

double SequenceConfig::score_threshold() const {
  switch (model) {
    case ModelVariant::BuFull: return threshold_bu_full;
    case ModelVariant::BuSparse: return threshold_bu_sparse;
    case ModelVariant::TdBu: return threshold_tdbu;
  }
  return 0.0;
}

SparsityPattern SequenceConfig::pattern(const PartVocabulary& parts) const {
  return sparse_pattern ? *sparse_pattern : SparsityPattern::kinematic_tree(parts);
}

void SequenceConfig::check() const {
  if (window < 1) throw ConfigError("window must be at least 1");
  if (overlap < 0 || overlap >= window) throw ConfigError("overlap must lie in [0, window)");
  if (seeds < 1) throw ConfigError("seeds must be at least 1");
  if (min_head_track_frames < 1) throw ConfigError("min_head_track_frames must be at least 1");
  for (double t : {threshold_bu_full, threshold_bu_sparse, threshold_tdbu})
    if (!(t >= 0 && t <= 1)) throw ConfigError("score thresholds must lie in [0, 1]");
  solver.check();
}

Pose extract_pose(const std::vector<Detection>& members, int frame) {
  std::map<int, const Detection*> best;
  for (const auto& d : members) {
    if (d.frame != frame) continue;
    auto& slot = best[d.part];
    if (!slot || d.score > slot->score || (d.score == slot->score && d.node_id < slot->node_id)) slot = &d;
  }
  Pose pose;
  for (const auto& [part, d] : best) pose[part] = {d->pos, d->score, d->node_id};
  return pose;
}

Sequence filter_by_score(const Sequence& seq, double threshold) {
  if (!(threshold >= 0 && threshold <= 1)) throw ConfigError("score threshold must lie in [0, 1]");
  return seq.filtered([threshold](const Detection& d) { return d.score > threshold; });
}

TrackSet filter_by_score(const TrackSet& tracks, double threshold) {
  if (!(threshold >= 0 && threshold <= 1)) throw ConfigError("score threshold must lie in [0, 1]");
  TrackSet out;
  for (const auto& [id, frames] : tracks.persons)
    for (const auto& [t, pose] : frames)
      for (const auto& [part, j] : pose)
        if (j.score > threshold) out.set(id, t, part, j);
  return out;
}

TrackSet seed_head_tracks(const Sequence& seq, const CostModels& models, const SequenceConfig& cfg,
                          StageTimings* timings) {
  const auto start = Clock::now();
  const auto anchor = seq.parts.anchor_root();
  const auto second = seq.parts.secondary_root();
  if (!anchor || !second) throw ConfigError("head-track seeding needs a root pair in the part vocabulary");
  const Sequence heads = seq.filtered([&](const Detection& d) { return seq.parts.is_root(d.part); });
  TrackSet out;
  if (heads.detection_count() == 0) return out;

  ProblemGraph graph;
  if (cfg.model == ModelVariant::TdBu) {
    graph = build_tdbu(heads, models, cfg.build);
  } else {
    SparsityPattern pattern;
    pattern.pairs.insert(std::minmax(*anchor, *second));
    graph = build_bu(heads, models, pattern, cfg.build);
  }
  Solution sol = solve_best_of_seeds(graph, cfg.solver, cfg.seeds);
  if (cfg.model == ModelVariant::TdBu) sol = drop_rootless(graph, sol);

  const int min_frames = std::min(cfg.min_head_track_frames, std::max(1, seq.frame_count()));
  int next_id = 0;
  for (const auto& cluster : sol.clusters()) {
    std::vector<Detection> members;
    std::set<int> frames;
    for (NodeIndex i : cluster) {
      members.push_back(graph.detection(i));
      frames.insert(graph.detection(i).frame);
    }
    if (static_cast<int>(frames.size()) < min_frames) continue;
    const int id = next_id++;
    for (int t : frames) out.persons[id][t] = extract_pose(members, t);
  }
  if (timings) timings->seed_ms += ms_since(start);
  return out;
}

TrackResult track_full(const Sequence& seq, const CostModels& models, const TrackSet& head_tracks,
                       const SequenceConfig& cfg) {
  cfg.check();
  TrackResult result;
  result.head_tracks = head_tracks;
  const int frames = seq.frame_count();
  if (frames == 0) return result;

  // Head node id -> track id.
  std::map<std::int64_t, int> track_of;
  for (const auto& [id, poses] : head_tracks.persons)
    for (const auto& [t, pose] : poses)
      for (const auto& [part, j] : pose) {
        if (j.node < 0) throw StructuralError("head track joints must reference detection node ids");
        if (!track_of.emplace(j.node, id).second)
          throw InfeasibleError("detection " + std::to_string(j.node) + " is seeded into two head tracks");
      }

  std::vector<std::pair<int, int>> windows;
  for (int s = 0;; s += cfg.window - cfg.overlap) {
    const int e = std::min(s + cfg.window, frames);
    windows.emplace_back(s, e);
    if (e == frames) break;
  }
  result.windows = static_cast<int>(windows.size());

  std::vector<std::map<int, std::map<int, Pose>>> per_window;
  for (const auto& [s, e] : windows) {
    auto start = Clock::now();
    const Sequence sub = seq.filtered([&](const Detection& d) {
      return d.frame >= s && d.frame < e && (!seq.parts.is_root(d.part) || track_of.count(d.node_id));
    });
    const ProblemGraph base = build_variant(sub, models, cfg);

    // Must-link along a spanning forest of each track's edges; must-cut
    // between the components of different tracks.
    const auto n = static_cast<std::size_t>(base.size());
    std::vector<int> node_track(n, -1);
    for (NodeIndex i = 0; i < base.size(); ++i)
      if (auto it = track_of.find(base.detection(i).node_id); it != track_of.end())
        node_track[static_cast<std::size_t>(i)] = it->second;
    detail::DisjointSets sets(n);
    std::vector<NodePair> must_link;
    for (const auto& edge : base.edges()) {
      const int a = node_track[static_cast<std::size_t>(edge.u)], b = node_track[static_cast<std::size_t>(edge.v)];
      if (a >= 0 && a == b && sets.unite(static_cast<std::size_t>(edge.u), static_cast<std::size_t>(edge.v)))
        must_link.emplace_back(edge.u, edge.v);
    }
    std::vector<std::pair<int, NodeIndex>> reps;  // (track, representative)
    for (NodeIndex i = 0; i < base.size(); ++i)
      if (node_track[static_cast<std::size_t>(i)] >= 0 && sets.find(static_cast<std::size_t>(i)) == static_cast<std::size_t>(i))
        reps.emplace_back(node_track[static_cast<std::size_t>(i)], i);
    std::vector<NodePair> must_cut = base.must_cut();
    for (std::size_t a = 0; a < reps.size(); ++a)
      for (std::size_t b = a + 1; b < reps.size(); ++b)
        if (reps[a].first != reps[b].first) must_cut.emplace_back(reps[a].second, reps[b].second);
    const ProblemGraph graph(base.parts(), base.detections(), base.edges(), base.node_costs(), std::move(must_link),
                             std::move(must_cut));
    result.timings.build_ms += ms_since(start);
    result.nodes += static_cast<std::size_t>(graph.size());
    result.edges += graph.edges().size();

    start = Clock::now();
    const Solution sol = solve_best_of_seeds(graph, cfg.solver, cfg.seeds);
    result.objective += objective(graph, sol);
    result.timings.solve_ms += ms_since(start);

    start = Clock::now();
    Grouped grouped;
    for (const auto& cluster : sol.clusters()) {
      int id = -1;
      for (NodeIndex i : cluster)
        if (node_track[static_cast<std::size_t>(i)] >= 0) id = node_track[static_cast<std::size_t>(i)];
      if (id < 0) continue;
      for (NodeIndex i : cluster) grouped[id][graph.detection(i).frame].push_back(graph.detection(i));
    }
    per_window.push_back(reduce(grouped));
    result.timings.extract_ms += ms_since(start);
  }

  // Each frame is taken from the window where it sits furthest from an edge.
  const auto start = Clock::now();
  for (int t = 0; t < frames; ++t) {
    std::size_t owner = 0;
    int depth = -1;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const auto [s, e] = windows[w];
      if (t < s || t >= e) continue;
      const int d = std::min(t - s, e - 1 - t);
      if (d > depth) depth = d, owner = w;
    }
    for (const auto& [id, poses] : per_window[owner])
      if (auto it = poses.find(t); it != poses.end()) result.tracks.persons[id][t] = it->second;
  }
  result.timings.extract_ms += ms_since(start);
  return result;
}

TrackResult track(const Sequence& seq, const CostModels& models, const SequenceConfig& cfg) {
  cfg.check();
  StageTimings seeding;
  const TrackSet heads = seed_head_tracks(seq, models, cfg, &seeding);
  TrackResult result = track_full(seq, models, heads, cfg);
  result.timings.seed_ms = seeding.seed_ms;
  const auto start = Clock::now();
  result.tracks = filter_by_score(result.tracks, cfg.score_threshold());
  result.timings.extract_ms += ms_since(start);
  return result;
}

}  // namespace arttrack
