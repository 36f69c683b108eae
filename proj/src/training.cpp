#include <algorithm>
#include <cmath>
#include <map>

#include "arttrack/errors.hpp"
#include "arttrack/graph_builder.hpp"

namespace arttrack {

std::vector<int> assign_detections(const Sequence& seq, const GroundTruth& gt, double alpha) {
  if (!(alpha > 0)) throw ConfigError("alpha must be positive");
  std::vector<int> out;
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    for (const auto& d : seq.frames[t]) {
      int best = -1;
      double best_dist = 0.0;
      if (t < gt.frames.size()) {
        for (const auto& person : gt.frames[t]) {
          const auto j = person.joints.find(d.part);
          if (j == person.joints.end()) continue;
          const double dist = distance(d.pos, j->second.pos);
          if (dist > alpha * person.head_size) continue;
          if (best < 0 || dist < best_dist) {
            best = person.id;
            best_dist = dist;
          }
        }
      }
      out.push_back(best);
    }
  }
  return out;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Labeled {
  const Sequence* seq;
  std::vector<const Detection*> dets;
  std::vector<int> person;
  std::vector<std::size_t> frame_start;
};

Labeled label(const Sequence& seq, const GroundTruth& gt, double alpha) {
  seq.check();
  Labeled l{&seq, {}, assign_detections(seq, gt, alpha), {0}};
  for (const auto& f : seq.frames) {
    for (const auto& d : f) l.dets.push_back(&d);
    l.frame_start.push_back(l.dets.size());
  }
  return l;
}

int same_person(int a, int b) { return a >= 0 && a == b ? 1 : 0; }

}  // namespace

CostModels train_cost_models(const std::vector<std::pair<Sequence, GroundTruth>>& data,
                             const PairwiseTraining& options) {
  if (data.empty()) throw StructuralError("no training sequences");
  const PartVocabulary& parts = data.front().first.parts;
  for (const auto& [seq, _] : data)
    if (!(seq.parts == parts)) throw StructuralError("training sequences use different part vocabularies");
  options.pattern.check(parts);
  options.region.check();
  if (options.features.empty()) throw ConfigError("empty temporal feature set");

  std::vector<Labeled> labeled;
  for (const auto& [seq, gt] : data) labeled.push_back(label(seq, gt, options.alpha));

  CostModels models;
  models.same_type = default_same_type_model(options.same_type_crossover);

  // Cross-type: mean partner offset from positive pairs, then a logistic
  // model on the geometric features of all same-frame pairs.
  for (const auto& [pa, pb] : options.pattern.expand(parts)) {
    CrossTypeModel m;
    m.part_a = pa;
    m.part_b = pb;
    struct Pair {
      const Detection* a;
      const Detection* b;
      int y;
    };
    std::vector<Pair> pairs;
    double sx = 0, sy = 0;
    int positives = 0;
    for (const auto& l : labeled)
      for (std::size_t t = 0; t + 1 < l.frame_start.size(); ++t)
        for (auto i = l.frame_start[t]; i < l.frame_start[t + 1]; ++i) {
          if (l.dets[i]->part != pa) continue;
          for (auto j = l.frame_start[t]; j < l.frame_start[t + 1]; ++j) {
            if (l.dets[j]->part != pb) continue;
            const int y = same_person(l.person[i], l.person[j]);
            pairs.push_back({l.dets[i], l.dets[j], y});
            if (y) {
              sx += l.dets[j]->pos.x - l.dets[i]->pos.x;
              sy += l.dets[j]->pos.y - l.dets[i]->pos.y;
              ++positives;
            }
          }
        }
    if (positives > 0) m.offset = {sx / positives, sy / positives};
    if (pairs.empty()) {
      m.logistic = LogisticModel(std::string(kCrossTypeSchema),
                                 {"fwd_offset", "fwd_angle", "bwd_offset", "bwd_angle"}, std::vector<double>(5, 0.0));
    } else {
      std::vector<EdgeFeatureVector> samples;
      std::vector<int> labels;
      for (const auto& p : pairs) {
        samples.push_back(cross_type_features(*p.a, *p.b, m));
        labels.push_back(p.y);
      }
      m.logistic = train_logistic(samples, labels, options.optimizer);
    }
    models.cross_type.push_back(std::move(m));
  }
  models.normalize();

  // Temporal: candidate edges under the gate, labeled by identity.
  struct Candidate {
    const Labeled* l;
    std::size_t i, j;
  };
  std::vector<Candidate> candidates;
  for (const auto& l : labeled)
    for (std::size_t t = 0; t + 2 < l.frame_start.size(); ++t)
      for (auto i = l.frame_start[t]; i < l.frame_start[t + 1]; ++i)
        for (auto j = l.frame_start[t + 1]; j < l.frame_start[t + 2]; ++j)
          if (l.dets[i]->part == l.dets[j]->part &&
              distance(l.dets[i]->pos, l.dets[j]->pos) <= options.temporal_gate)
            candidates.push_back({&l, i, j});
  if (candidates.empty()) return models;

  auto inputs = [](const Candidate& c) {
    const auto& a = *c.l->dets[c.i];
    const auto& b = *c.l->dets[c.j];
    return TemporalInputs{c.l->seq->descriptor(a.node_id), c.l->seq->descriptor(b.node_id),
                          c.l->seq->correspondences_for(a.frame, FlowDirection::Forward),
                          c.l->seq->correspondences_for(a.frame, FlowDirection::Reverse)};
  };
  // Medians of each modality over the candidates where it is observed.
  std::vector<double> sift, dm, dm_rev;
  for (const auto& c : candidates) {
    const auto in = inputs(c);
    const auto& a = *c.l->dets[c.i];
    const auto& b = *c.l->dets[c.j];
    if (in.desc_a && in.desc_b) sift.push_back(delta_sift(*in.desc_a, *in.desc_b));
    if (in.forward)
      dm.push_back(delta_dm(in.forward->pairs, region_around(a, options.region), region_around(b, options.region)));
    if (in.reverse)
      dm_rev.push_back(
          delta_dm(in.reverse->pairs, region_around(b, options.region), region_around(a, options.region)));
  }
  TemporalModel tm;
  tm.features = options.features;
  tm.imputation = {median(sift), median(dm), median(dm_rev)};
  std::vector<EdgeFeatureVector> samples;
  std::vector<int> labels;
  for (const auto& c : candidates) {
    const auto g = assemble_g(*c.l->dets[c.i], *c.l->dets[c.j], inputs(c), options.region, tm.imputation);
    samples.push_back(select_features(g, tm.features));
    labels.push_back(same_person(c.l->person[c.i], c.l->person[c.j]));
  }
  tm.logistic = train_logistic(samples, labels, options.optimizer);
  models.temporal = std::move(tm);
  return models;
}

}  // namespace arttrack
