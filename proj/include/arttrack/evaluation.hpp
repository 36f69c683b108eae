#pragma once

// Pose-estimation AP and per-joint MOTA against annotated sequences.

#include <map>
#include <utility>
#include <vector>

#include "arttrack/core_model.hpp"
#include "arttrack/sequence.hpp"

namespace arttrack {

/// True iff |pred - gt| <= alpha * head_size. Throws DomainError unless
/// head_size > 0.
bool match_pckh(Point pred, Point gt, double head_size, double alpha = 0.5);

/// One predicted person in one frame.
struct PosePrediction {
  int frame = 0;
  double score = 0.0;
  Pose joints;
};

/// Each (person, frame) of the tracks as a prediction scored by its mean
/// joint score.
std::vector<PosePrediction> predictions_from_tracks(const TrackSet& tracks);

/// Area under the precision-recall curve with every-point interpolation.
/// `ranked` holds (score, true positive) pairs in any order; equal scores
/// are evaluated as one operating point.
double average_precision(std::vector<std::pair<double, bool>> ranked, std::size_t positives);

struct ApReport {
  std::vector<double> per_part;          // NaN for parts without annotations
  std::vector<std::size_t> annotations;  // annotated joints per part
  double mean = 0.0;                     // over parts with annotations; NaN if none
};

/// Predicted joints inside ignore regions are removed first. Persons are then
/// matched greedily per frame in score order to the unmatched annotation
/// with the most PCKh-matching joints, provided more than half of the joints
/// they share match. Matched joints within the gate are true positives,
/// everything else is a false positive.
ApReport ap_per_part(const std::vector<PosePrediction>& predictions, const GroundTruth& gt, int part_count,
                     double alpha = 0.5);

struct PartMota {
  int part = -1;  // -1 for the average row
  long misses = 0;
  long false_positives = 0;
  long id_switches = 0;
  long annotations = 0;
  double mota = 0.0;  // NaN when there are no annotations
};

struct MotaReport {
  std::vector<PartMota> parts;
  /// Counts summed over parts; mota is the mean of the per-part values.
  PartMota average;
  /// Identity switches per (annotated person, part).
  std::map<std::pair<int, int>, long> switches_by_target;
};

struct MotaOptions {
  double alpha = 0.5;
  /// Optimal assignment instead of greedy nearest neighbour.
  bool hungarian = false;
};

/// CLEAR-MOT counting per part: last-frame correspondences are kept while
/// still within the PCKh gate, the remaining pairs are matched by distance
/// under the gate, and a target matched to a hypothesis other than its
/// previous one counts an identity switch.
MotaReport mota(const TrackSet& tracks, const GroundTruth& gt, int part_count, const MotaOptions& options = {});

/// Minimum-cost assignment. Returns for each row the matched column or -1
/// (when there are more rows than columns).
std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace arttrack
