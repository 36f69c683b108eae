#pragma once

// Graph construction for the bottom-up (BU-full, BU-sparse) and
// top-down/bottom-up (TD/BU) models, plus the pairwise cost models and their
// training from annotated sequences.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arttrack/core_model.hpp"
#include "arttrack/logistic.hpp"
#include "arttrack/sequence.hpp"
#include "arttrack/temporal_features.hpp"

namespace arttrack {

/// Part-type pairs allowed to carry cross-type edges within a frame.
struct SparsityPattern {
  bool full = false;
  std::set<std::pair<int, int>> pairs;  // (low id, high id)

  static SparsityPattern all_pairs();
  /// head_top-neck, neck-shoulders, shoulder-elbow, elbow-wrist, neck-hips,
  /// hip-knee, knee-ankle. Throws ConfigError if a part is missing.
  static SparsityPattern kinematic_tree(const PartVocabulary& parts);
  /// Throws ConfigError on unknown part names or self pairs.
  static SparsityPattern from_names(const PartVocabulary& parts,
                                    const std::vector<std::pair<std::string, std::string>>& names);

  bool allows(int a, int b) const;
  /// Every pair this pattern admits over the vocabulary, ascending.
  std::vector<std::pair<int, int>> expand(const PartVocabulary& parts) const;
  void check(const PartVocabulary& parts) const;
};

/// Cost of joining two detections whose join probability is p:
/// -log(p / (1 - p)) under the negated convention.
double edge_cost_from_probability(double p, CostConvention convention = CostConvention::Negated);
/// Same mapping applied to a logit; never overflows for extreme values.
double edge_cost_from_decision(double logit, CostConvention convention = CostConvention::Negated);

inline constexpr std::string_view kCrossTypeSchema = "cross_type:fwd_offset,fwd_angle,bwd_offset,bwd_angle";
inline constexpr std::string_view kSameTypeSchema = "same_type:distance";

/// Pairwise model for detections of parts (part_a, part_b), part_a < part_b.
/// `offset` is the mean displacement from part_a to part_b and acts as the
/// location regressor in both directions.
struct CrossTypeModel {
  int part_a = 0;
  int part_b = 0;
  Point offset;
  LogisticModel logistic;

  friend bool operator==(const CrossTypeModel&, const CrossTypeModel&) = default;
};

/// Offset error and angle between predicted and actual partner location,
/// forward (part_a predicts part_b) and backward. The detections may be
/// passed in either order.
EdgeFeatureVector cross_type_features(const Detection& a, const Detection& b, const CrossTypeModel& model);
double cross_type_cost(const EdgeFeatureVector& features, const LogisticModel& model,
                       CostConvention convention = CostConvention::Negated);

/// Logistic on distance with p = 0.5 at `crossover` pixels.
LogisticModel default_same_type_model(double crossover = 15.0);
double same_type_cost(double distance, const LogisticModel& model,
                      CostConvention convention = CostConvention::Negated);

struct TemporalModel {
  FeatureSet features;
  TemporalImputation imputation;
  LogisticModel logistic;

  friend bool operator==(const TemporalModel&, const TemporalModel&) = default;
};

/// Distance-only temporal model with p = 0.5 at `crossover` pixels.
TemporalModel default_temporal_model(double crossover = 30.0);

struct CostModels {
  std::vector<CrossTypeModel> cross_type;  // sorted by (part_a, part_b)
  LogisticModel same_type = default_same_type_model();
  std::optional<TemporalModel> temporal;

  const CrossTypeModel* find_cross(int a, int b) const;
  /// Sorts cross_type and rejects duplicates or unordered pairs.
  void normalize();

  friend bool operator==(const CostModels&, const CostModels&) = default;
};

struct BuildOptions {
  /// Maximum displacement of a temporal edge; twice the 30 px head size.
  double temporal_gate = 60.0;
  RegionSpec region;
  CostConvention convention = CostConvention::Negated;
  /// Constant unary cost of every TD/BU node.
  double tdbu_unary = 0.0;
  bool temporal = true;
};

/// Bottom-up graph: cross-type edges per pattern and same-type edges within
/// each frame, temporal edges between same-type detections of adjacent
/// frames within the gate, node costs from detection scores. Nodes follow
/// frame order, then file order within a frame.
ProblemGraph build_bu(const Sequence& seq, const CostModels& models, const SparsityPattern& pattern,
                      const BuildOptions& options = {});

/// Top-down/bottom-up graph: anchor-root detections act as person nodes,
/// joined to proposals through the attachments; must-cut between every two
/// person nodes of one frame; same-type and temporal edges as in build_bu;
/// no cross-type edges; constant node costs.
ProblemGraph build_tdbu(const Sequence& seq, const CostModels& models, const BuildOptions& options = {});

/// Unselects every cluster that holds no anchor-root node.
Solution drop_rootless(const ProblemGraph& graph, const Solution& sol);

// ---------------------------------------------------------------------------
// Training

struct PairwiseTraining {
  TrainOptions optimizer;
  SparsityPattern pattern = SparsityPattern::all_pairs();
  FeatureSet features;
  /// PCKh factor for assigning detections to annotated persons.
  double alpha = 0.5;
  double temporal_gate = 60.0;
  RegionSpec region;
  double same_type_crossover = 15.0;
};

/// Person id of the annotation each detection belongs to (nearest joint of
/// the same part within alpha * head size), or -1 for clutter. Indexed like
/// the flattened frames of `seq`.
std::vector<int> assign_detections(const Sequence& seq, const GroundTruth& gt, double alpha);

/// Fits cross-type models for every pattern pair and the temporal model on
/// the sequences' labeled candidate edges.
CostModels train_cost_models(const std::vector<std::pair<Sequence, GroundTruth>>& data,
                             const PairwiseTraining& options);

}  // namespace arttrack
