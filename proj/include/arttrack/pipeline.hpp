#pragma once

// Sequence tracking: head tracks are solved first on the root parts alone,
// then the full-body graph is solved with must-link constraints inside each
// head track and must-cut constraints between different ones. Clusters are
// reduced to poses and keyed by the head track they contain.

#include <optional>
#include <string_view>
#include <vector>

#include "arttrack/graph_builder.hpp"
#include "arttrack/multicut_solver.hpp"
#include "arttrack/sequence.hpp"

namespace arttrack {

enum class ModelVariant { BuFull, BuSparse, TdBu };

std::string_view to_string(ModelVariant variant);
/// Accepts "bu-full", "bu-sparse", "tdbu"; throws ConfigError otherwise.
ModelVariant model_variant_from_string(std::string_view name);

struct SequenceConfig {
  ModelVariant model = ModelVariant::BuSparse;
  /// Frames solved jointly. Longer sequences use overlapping windows
  /// stitched by head-track identity.
  int window = 41;
  int overlap = 10;
  SolverParams solver;
  /// Local-search restarts per solve (seeds solver.seed, solver.seed + 1, ...).
  int seeds = 1;
  BuildOptions build;
  /// Cross-type pattern of the BU-sparse model; the kinematic tree if unset.
  std::optional<SparsityPattern> sparse_pattern;
  /// Output joints scoring at or below the threshold are removed.
  double threshold_bu_full = 0.65;
  double threshold_bu_sparse = 0.65;
  double threshold_tdbu = 0.7;
  /// Head tracks spanning fewer frames are dropped (capped at the sequence
  /// length).
  int min_head_track_frames = 2;

  double score_threshold() const;
  SparsityPattern pattern(const PartVocabulary& parts) const;
  /// Throws ConfigError on out-of-range values.
  void check() const;
};

/// Wall-clock milliseconds per stage.
struct StageTimings {
  double seed_ms = 0.0;
  double build_ms = 0.0;
  double solve_ms = 0.0;
  double extract_ms = 0.0;
};

struct TrackResult {
  TrackSet tracks;       // after the score threshold
  TrackSet head_tracks;  // seeding output
  StageTimings timings;
  /// Summed over windows, full-body stage only.
  double objective = 0.0;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  int windows = 0;
};

/// Best detection per part among `members` in `frame`: highest score, ties
/// to the lowest node id.
Pose extract_pose(const std::vector<Detection>& members, int frame);

/// Detections with score strictly above the threshold. Throws ConfigError
/// unless threshold is in [0, 1].
Sequence filter_by_score(const Sequence& seq, double threshold);
/// Joints with score strictly above the threshold; empty poses and persons
/// are removed.
TrackSet filter_by_score(const TrackSet& tracks, double threshold);

/// Head tracks from the root parts only. Returns an empty set when the
/// vocabulary has roots but no root detections; throws ConfigError without
/// a root pair.
TrackSet seed_head_tracks(const Sequence& seq, const CostModels& models, const SequenceConfig& config,
                          StageTimings* timings = nullptr);

/// Full-body tracks keyed by head track id. Root detections outside every
/// head track are ignored. Throws InfeasibleError when the seeds conflict.
TrackResult track_full(const Sequence& seq, const CostModels& models, const TrackSet& head_tracks,
                       const SequenceConfig& config);

/// seed_head_tracks, track_full and the score threshold.
TrackResult track(const Sequence& seq, const CostModels& models, const SequenceConfig& config);

}  // namespace arttrack
