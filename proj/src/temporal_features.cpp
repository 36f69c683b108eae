#include "arttrack/temporal_features.hpp"

#include <cmath>
#include <limits>

#include "arttrack/errors.hpp"

namespace arttrack {

std::string_view to_string(FlowDirection d) { return d == FlowDirection::Forward ? "forward" : "reverse"; }

FlowDirection flow_direction_from_string(std::string_view name) {
  if (name == "forward") return FlowDirection::Forward;
  if (name == "reverse") return FlowDirection::Reverse;
  throw StructuralError("unknown correspondence direction '" + std::string(name) + "'");
}

void RegionSpec::check() const {
  if (!(side > 0.0) || !std::isfinite(side)) throw ConfigError("region side must be positive");
}

bool Region::contains(Point p) const {
  const double h = side / 2.0;
  return std::abs(p.x - center.x) <= h && std::abs(p.y - center.y) <= h;
}

Region region_around(const Detection& d, const RegionSpec& spec) { return {d.pos, spec.side}; }

double delta_l2(const Detection& a, const Detection& b) { return distance(a.pos, b.pos); }

double delta_sift(const DescriptorSet& a, const DescriptorSet& b) {
  if (a.vectors.empty() || b.vectors.empty()) throw StructuralError("descriptor set without vectors");
  const auto len = a.vectors.front().size();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& u : a.vectors) {
    for (const auto& v : b.vectors) {
      if (u.size() != len || v.size() != len)
        throw StructuralError("descriptor length mismatch between nodes " + std::to_string(a.node_id) +
                              " and " + std::to_string(b.node_id));
      double s = 0.0;
      for (std::size_t k = 0; k < len; ++k) s += (u[k] - v[k]) * (u[k] - v[k]);
      best = std::min(best, std::sqrt(s));
    }
  }
  return best;
}

double delta_dm(const std::vector<Correspondence>& corr, const Region& ri, const Region& rj) {
  std::size_t both = 0, starts = 0, ends = 0;
  for (const auto& c : corr) {
    const bool s = ri.contains(c.first);
    const bool e = rj.contains(c.second);
    starts += s;
    ends += e;
    both += s && e;
  }
  if (starts + ends == 0) return 0.0;
  return static_cast<double>(both) / static_cast<double>(starts + ends);
}

FeatureSet FeatureSet::parse(std::string_view text) {
  FeatureSet set{false, false, false};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    bool* slot = nullptr;
    if (item == "l2") slot = &set.l2;
    else if (item == "sift") slot = &set.sift;
    else if (item == "dm") slot = &set.dm;
    else throw ConfigError("unknown temporal feature '" + std::string(item) + "' (expected l2, sift, dm)");
    if (*slot) throw ConfigError("temporal feature '" + std::string(item) + "' listed twice");
    *slot = true;
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return set;
}

std::string FeatureSet::to_string() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(l2, "l2");
  add(sift, "sift");
  add(dm, "dm");
  return out;
}

std::vector<std::string> FeatureSet::names() const {
  std::vector<std::string> out;
  if (l2) out.emplace_back("l2");
  if (sift) out.emplace_back("sift");
  if (dm) {
    out.emplace_back("dm");
    out.emplace_back("dm_rev");
  }
  return out;
}

EdgeFeatureVector assemble_g(const Detection& a, const Detection& b, const TemporalInputs& inputs,
                             const RegionSpec& region, const TemporalImputation& imputation) {
  region.check();
  const bool ordered = b.frame == a.frame + 1;
  if (!ordered && a.frame != b.frame + 1)
    throw StructuralError("temporal features need adjacent frames, got " + std::to_string(a.frame) + " and " +
                          std::to_string(b.frame));
  if (a.part != b.part) throw StructuralError("temporal features need detections of one part type");
  const Detection& early = ordered ? a : b;
  const Detection& late = ordered ? b : a;
  const DescriptorSet* desc_early = ordered ? inputs.desc_a : inputs.desc_b;
  const DescriptorSet* desc_late = ordered ? inputs.desc_b : inputs.desc_a;

  const Region r_early = region_around(early, region);
  const Region r_late = region_around(late, region);

  auto check_set = [&](const CorrespondenceSet* set, FlowDirection dir) {
    if (set && (set->frame != early.frame || set->direction != dir))
      throw StructuralError("correspondence set does not belong to frames " + std::to_string(early.frame) +
                            "/" + std::to_string(late.frame));
  };
  check_set(inputs.forward, FlowDirection::Forward);
  check_set(inputs.reverse, FlowDirection::Reverse);

  EdgeFeatureVector g;
  g.schema = std::string(kTemporalSchema) + ":l2,sift,dm,dm_rev";
  g.names = {"l2", "sift", "dm", "dm_rev"};
  g.values = {
      delta_l2(early, late),
      desc_early && desc_late ? delta_sift(*desc_early, *desc_late) : imputation.sift,
      inputs.forward ? delta_dm(inputs.forward->pairs, r_early, r_late) : imputation.dm,
      // Reverse matches start in the later image.
      inputs.reverse ? delta_dm(inputs.reverse->pairs, r_late, r_early) : imputation.dm_rev,
  };
  return g;
}

EdgeFeatureVector select_features(const EdgeFeatureVector& g, const FeatureSet& set) {
  if (g.names != std::vector<std::string>{"l2", "sift", "dm", "dm_rev"})
    throw StructuralError("select_features expects a full temporal feature vector");
  if (set.empty()) throw ConfigError("empty temporal feature set");
  EdgeFeatureVector out;
  out.schema = std::string(kTemporalSchema) + ":" + set.to_string();
  const bool keep[4] = {set.l2, set.sift, set.dm, set.dm};
  for (std::size_t k = 0; k < 4; ++k) {
    if (!keep[k]) continue;
    out.names.push_back(g.names[k]);
    out.values.push_back(g.values[k]);
  }
  return out;
}

}  // namespace arttrack
