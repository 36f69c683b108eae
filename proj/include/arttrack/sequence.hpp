#pragma once

// Sequence-level containers: detections grouped by frame with their sidecar
// inputs, person tracks, and ground-truth annotations.

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "arttrack/core_model.hpp"
#include "arttrack/temporal_features.hpp"

namespace arttrack {

/// Person-conditioned probability that `proposal` belongs to the person
/// anchored at `root`.
struct ConditionalAttachment {
  std::int64_t root = 0;
  std::int64_t proposal = 0;
  double p = 0.5;

  friend bool operator==(const ConditionalAttachment&, const ConditionalAttachment&) = default;
};

struct Sequence {
  PartVocabulary parts;
  /// frames[t] holds the detections with frame == t.
  std::vector<std::vector<Detection>> frames;
  std::map<std::int64_t, DescriptorSet> descriptors;
  std::vector<CorrespondenceSet> correspondences;
  std::vector<ConditionalAttachment> attachments;

  int frame_count() const { return static_cast<int>(frames.size()); }
  std::size_t detection_count() const;
  const DescriptorSet* descriptor(std::int64_t node_id) const;
  const CorrespondenceSet* correspondences_for(int frame, FlowDirection direction) const;
  /// Throws StructuralError when a detection sits in the wrong frame, node
  /// ids repeat, or a sidecar record references an unknown node.
  void check() const;

  /// Copy restricted to detections accepted by `keep`. Sidecars of dropped
  /// detections are removed too.
  template <class Pred>
  Sequence filtered(Pred keep) const {
    Sequence out;
    out.parts = parts;
    out.correspondences = correspondences;
    out.frames.resize(frames.size());
    std::set<std::int64_t> kept;
    for (std::size_t t = 0; t < frames.size(); ++t)
      for (const auto& d : frames[t])
        if (keep(d)) {
          out.frames[t].push_back(d);
          kept.insert(d.node_id);
          if (auto it = descriptors.find(d.node_id); it != descriptors.end()) out.descriptors.insert(*it);
        }
    for (const auto& a : attachments)
      if (kept.count(a.root) && kept.count(a.proposal)) out.attachments.push_back(a);
    return out;
  }

  const Detection* find_detection(std::int64_t node_id) const;
};

struct Joint {
  Point pos;
  double score = 1.0;
  std::int64_t node = -1;  // source detection, -1 when unknown

  friend bool operator==(const Joint&, const Joint&) = default;
};

/// part id -> joint
using Pose = std::map<int, Joint>;

/// person id -> frame -> pose. At most one joint per (person, frame, part).
struct TrackSet {
  std::map<int, std::map<int, Pose>> persons;

  void set(int person, int frame, int part, const Joint& joint) { persons[person][frame][part] = joint; }
  const Pose* find(int person, int frame) const;
  std::vector<int> ids() const;
  std::size_t joint_count() const;
  bool empty() const { return persons.empty(); }
  /// Largest frame index plus one.
  int frame_span() const;

  friend bool operator==(const TrackSet&, const TrackSet&) = default;
};

struct GtPerson {
  int id = 0;
  double head_size = 1.0;
  Pose joints;

  friend bool operator==(const GtPerson&, const GtPerson&) = default;
};

/// Axis-aligned rectangle, closed.
struct IgnoreRegion {
  int frame = 0;
  Point min;
  Point max;

  bool contains(Point p) const { return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y; }
  friend bool operator==(const IgnoreRegion&, const IgnoreRegion&) = default;
};

struct GroundTruth {
  std::vector<std::vector<GtPerson>> frames;
  std::vector<IgnoreRegion> ignore;

  int frame_count() const { return static_cast<int>(frames.size()); }
  bool ignored(int frame, Point p) const;
  /// Throws StructuralError on non-positive head sizes or duplicate ids.
  void check() const;
  /// Annotations as tracks with score 1.
  TrackSet as_tracks() const;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

}  // namespace arttrack
