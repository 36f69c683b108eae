#pragma once

// Features of a candidate temporal edge between two same-type detections in
// adjacent frames: position change, descriptor distance, and the share of
// point correspondences linking the two detection regions.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "arttrack/core_model.hpp"
#include "arttrack/logistic.hpp"

namespace arttrack {

/// Local descriptors of one detection, one vector per dominant orientation.
struct DescriptorSet {
  std::int64_t node_id = 0;
  std::vector<std::vector<double>> vectors;

  friend bool operator==(const DescriptorSet&, const DescriptorSet&) = default;
};

enum class FlowDirection { Forward, Reverse };

std::string_view to_string(FlowDirection d);
FlowDirection flow_direction_from_string(std::string_view name);

struct Correspondence {
  Point first;   // in the first image of the pair
  Point second;  // in the second image

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

/// Matches between frames `frame` and `frame + 1`. Forward sets take the
/// first image at `frame`; reverse sets were computed with the image order
/// inverted, so their first points lie in `frame + 1`.
struct CorrespondenceSet {
  int frame = 0;
  FlowDirection direction = FlowDirection::Forward;
  std::vector<Correspondence> pairs;

  friend bool operator==(const CorrespondenceSet&, const CorrespondenceSet&) = default;
};

struct RegionSpec {
  double side = 64.0;

  void check() const;
};

/// Closed axis-aligned square.
struct Region {
  Point center;
  double side = 64.0;

  bool contains(Point p) const;
};

Region region_around(const Detection& d, const RegionSpec& spec);

double delta_l2(const Detection& a, const Detection& b);

/// Minimum Euclidean distance over all descriptor pairs. Throws
/// StructuralError on empty sets or mismatched lengths.
double delta_sift(const DescriptorSet& a, const DescriptorSet& b);

/// |{c : c.first in ri and c.second in rj}| divided by
/// |{c : c.first in ri}| + |{c : c.second in rj}|, or 0 when nothing touches
/// either region. Always in [0, 0.5].
double delta_dm(const std::vector<Correspondence>& corr, const Region& ri, const Region& rj);

/// Which modalities feed the temporal model. `dm` covers both the forward
/// and the reverse correspondence ratio.
struct FeatureSet {
  bool l2 = true;
  bool sift = true;
  bool dm = true;

  /// Parses a comma-separated subset of {l2, sift, dm}; throws ConfigError.
  static FeatureSet parse(std::string_view text);
  std::string to_string() const;
  /// Feature names in assemble_g order, restricted to this set.
  std::vector<std::string> names() const;
  bool empty() const { return !l2 && !sift && !dm; }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

/// Values substituted for features whose inputs are missing.
struct TemporalImputation {
  double sift = 0.0;
  double dm = 0.0;
  double dm_rev = 0.0;

  friend bool operator==(const TemporalImputation&, const TemporalImputation&) = default;
};

inline constexpr std::string_view kTemporalSchema = "temporal";

struct TemporalInputs {
  const DescriptorSet* desc_a = nullptr;
  const DescriptorSet* desc_b = nullptr;
  const CorrespondenceSet* forward = nullptr;
  const CorrespondenceSet* reverse = nullptr;
};

/// Full feature vector (l2, sift, dm, dm_rev) for detections a and b with
/// b.frame == a.frame + 1 (the arguments may come in either order). Throws
/// StructuralError for non-adjacent frames or different part types.
EdgeFeatureVector assemble_g(const Detection& a, const Detection& b, const TemporalInputs& inputs,
                             const RegionSpec& region, const TemporalImputation& imputation);

/// Keeps the features enabled in `set`; the schema records the subset.
EdgeFeatureVector select_features(const EdgeFeatureVector& g, const FeatureSet& set);

}  // namespace arttrack
