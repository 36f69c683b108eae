#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "arttrack/errors.hpp"
#include "arttrack/evaluation.hpp"
#include "arttrack/pipeline.hpp"
#include "arttrack/synth.hpp"

using namespace arttrack;

namespace {

const CostModels& trained() {
  static const CostModels models = [] {
    std::vector<std::pair<Sequence, GroundTruth>> data;
    for (std::uint64_t seed = 100; seed < 103; ++seed) {
      SynthConfig cfg;
      cfg.sigma = 4;
      cfg.miss_rate = 0.1;
      cfg.clutter_rate = 0.1;
      cfg.seed = seed;
      auto scene = synth_generate(cfg);
      data.emplace_back(std::move(scene.sequence), std::move(scene.truth));
    }
    PairwiseTraining training;
    training.features = FeatureSet::parse("l2,sift,dm");
    return train_cost_models(data, training);
  }();
  return models;
}

SynthScene clean(int persons = 3, int frames = 21, std::uint64_t seed = 0) {
  SynthConfig cfg;
  cfg.persons = persons;
  cfg.frames = frames;
  cfg.seed = seed;
  return synth_generate(cfg);
}

SequenceConfig config(ModelVariant v) {
  SequenceConfig cfg;
  cfg.model = v;
  return cfg;
}

Detection det(std::int64_t id, int frame, int part, double score, Point pos = {0, 0}) {
  return {id, frame, pos, score, part};
}

// Track id -> annotated person id by the neck in the track's first frame.
std::map<int, int> identify(const TrackSet& tracks, const GroundTruth& gt, int neck) {
  std::map<int, int> out;
  for (const auto& [id, frames] : tracks.persons) {
    const auto& [t, pose] = *frames.begin();
    for (const auto& p : gt.frames[static_cast<std::size_t>(t)])
      if (pose.count(neck) && p.joints.at(neck).pos == pose.at(neck).pos) out[id] = p.id;
  }
  return out;
}

bool equals_truth(const TrackSet& tracks, const GroundTruth& gt, int neck) {
  const auto ids = identify(tracks, gt, neck);
  if (ids.size() != tracks.persons.size()) return false;
  auto truth = gt.as_tracks();
  TrackSet relabeled;
  for (const auto& [id, frames] : tracks.persons)
    for (const auto& [t, pose] : frames)
      for (const auto& [part, j] : pose) relabeled.set(ids.at(id), t, part, {j.pos, 1.0, -1});
  return relabeled == truth;
}

}  // namespace

TEST_CASE("model variant names") {
  for (auto v : {ModelVariant::BuFull, ModelVariant::BuSparse, ModelVariant::TdBu})
    CHECK(model_variant_from_string(to_string(v)) == v);
  CHECK_THROWS_AS(model_variant_from_string("bu"), ConfigError);
}

TEST_CASE("extract_pose") {
  const int wrist = 6, ankle = 0;
  const std::vector<Detection> members{det(4, 2, wrist, 0.6, {1, 1}), det(7, 2, wrist, 0.8, {2, 2}),
                                       det(9, 3, wrist, 0.9, {3, 3})};
  const auto pose = extract_pose(members, 2);
  REQUIRE(pose.size() == 1);
  CHECK(pose.at(wrist).node == 7);
  CHECK(pose.at(wrist).pos == Point{2, 2});
  CHECK(pose.count(ankle) == 0);
  CHECK(extract_pose({det(3, 0, ankle, 0.5)}, 0).at(ankle).node == 3);
  // Equal scores go to the lower node id.
  CHECK(extract_pose({det(8, 0, ankle, 0.5), det(5, 0, ankle, 0.5)}, 0).at(ankle).node == 5);
  CHECK(extract_pose(members, 0).empty());
}

TEST_CASE("filter_by_score") {
  Sequence seq;
  seq.parts = PartVocabulary::standard14();
  seq.frames = {{det(0, 0, 1, 0.65), det(1, 0, 1, 0.66), det(2, 0, 1, 0.7), det(3, 0, 1, 0.71)}};
  CHECK(filter_by_score(seq, 0.65).detection_count() == 3);
  CHECK(filter_by_score(seq, 0.7).detection_count() == 1);
  CHECK(filter_by_score(seq, 0.0).detection_count() == 4);
  CHECK_THROWS_AS(filter_by_score(seq, 1.5), ConfigError);

  CHECK(config(ModelVariant::BuSparse).score_threshold() == 0.65);
  CHECK(config(ModelVariant::TdBu).score_threshold() == 0.7);

  TrackSet tracks;
  tracks.set(0, 0, 1, {{0, 0}, 0.65, 0});
  tracks.set(0, 1, 1, {{0, 0}, 0.9, 1});
  tracks.set(1, 0, 1, {{0, 0}, 0.2, 2});
  const auto kept = filter_by_score(tracks, 0.65);
  CHECK(kept.ids() == std::vector<int>{0});
  CHECK(kept.joint_count() == 1);
}

TEST_CASE("head tracks") {
  const int neck = 12;
  SUBCASE("one person, five frames") {
    const auto scene = clean(1, 5);
    const auto heads = seed_head_tracks(scene.sequence, trained(), config(ModelVariant::BuSparse));
    REQUIRE(heads.persons.size() == 1);
    CHECK(heads.persons.begin()->second.size() == 5);
  }
  SUBCASE("two separated people map onto the annotations") {
    const auto scene = clean(2, 10, 3);
    for (auto v : {ModelVariant::BuSparse, ModelVariant::TdBu}) {
      const auto heads = seed_head_tracks(scene.sequence, trained(), config(v));
      REQUIRE(heads.persons.size() == 2);
      const auto ids = identify(heads, scene.truth, neck);
      REQUIRE(ids.size() == 2);
      CHECK(ids.at(0) != ids.at(1));
      for (const auto& [id, frames] : heads.persons) {
        CHECK(frames.size() == 10);
        for (const auto& [t, pose] : frames) {
          CHECK(pose.size() == 2);
          for (const auto& [part, j] : pose)
            CHECK(j.pos == scene.truth.frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(ids.at(id))]
                               .joints.at(part)
                               .pos);
        }
      }
    }
  }
  SUBCASE("a head missing in a middle frame may split the track") {
    const auto scene = clean(1, 7);
    const auto seq = scene.sequence.filtered(
        [&](const Detection& d) { return !(d.frame == 3 && scene.sequence.parts.is_root(d.part)); });
    const auto heads = seed_head_tracks(seq, trained(), config(ModelVariant::BuSparse));
    CHECK(heads.persons.size() >= 1);
    CHECK(heads.persons.size() <= 2);
    std::size_t frames = 0;
    for (const auto& [_, f] : heads.persons) frames += f.size();
    CHECK(frames == 6);
  }
  SUBCASE("no root detections") {
    const auto scene = clean(2, 3);
    const auto seq = scene.sequence.filtered([&](const Detection& d) { return !scene.sequence.parts.is_root(d.part); });
    CHECK(seed_head_tracks(seq, trained(), config(ModelVariant::BuSparse)).empty());
  }
}

TEST_CASE("zero-noise tracking recovers the annotations exactly") {
  const auto scene = clean();
  const int neck = *scene.sequence.parts.anchor_root();
  for (auto v : {ModelVariant::BuFull, ModelVariant::BuSparse, ModelVariant::TdBu}) {
    CAPTURE(to_string(v));
    const auto r = track(scene.sequence, trained(), config(v));
    CHECK(equals_truth(r.tracks, scene.truth, neck));
    const auto report = mota(r.tracks, scene.truth, 14);
    for (const auto& p : report.parts) CHECK(p.mota == 1.0);
    CHECK(r.windows == 1);
  }
}

TEST_CASE("windowed solving stitches by head track") {
  const auto scene = clean(3, 21, 2);
  auto cfg = config(ModelVariant::BuSparse);
  cfg.window = 8;
  cfg.overlap = 3;
  const auto r = track(scene.sequence, trained(), cfg);
  CHECK(r.windows == 4);
  CHECK(equals_truth(r.tracks, scene.truth, *scene.sequence.parts.anchor_root()));
}

TEST_CASE("deleting one limb leaves the other joints alone") {
  const auto scene = clean(3, 21, 1);
  const int wrist = scene.sequence.parts.require("l_wrist");
  const auto seq = scene.sequence.filtered([&](const Detection& d) {
    return !(d.part == wrist && d.frame >= 5 && d.frame < 8);
  });
  for (auto v : {ModelVariant::BuSparse, ModelVariant::TdBu}) {
    const auto base = track(scene.sequence, trained(), config(v)).tracks;
    const auto cut = track(seq, trained(), config(v)).tracks;
    REQUIRE(base.ids() == cut.ids());
    for (const auto& [id, frames] : base.persons)
      for (const auto& [t, pose] : frames)
        for (const auto& [part, j] : pose) {
          const auto* other = cut.find(id, t);
          REQUIRE(other);
          if (part == wrist && t >= 5 && t < 8)
            CHECK(other->count(part) == 0);
          else
            CHECK(other->at(part) == j);
        }
  }
}

TEST_CASE("tracking invariants on noisy scenes") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SynthConfig sc;
    sc.sigma = 4;
    sc.miss_rate = 0.1;
    sc.clutter_rate = 0.1;
    sc.seed = seed;
    const auto scene = synth_generate(sc);
    for (auto v : {ModelVariant::BuFull, ModelVariant::BuSparse, ModelVariant::TdBu}) {
      auto cfg = config(v);
      const auto r = track(scene.sequence, trained(), cfg);
      // Head joints are exactly the seeded ones; nodes are never shared.
      std::set<std::int64_t> used;
      for (const auto& [id, frames] : r.tracks.persons)
        for (const auto& [t, pose] : frames)
          for (const auto& [part, j] : pose) {
            CHECK(used.insert(j.node).second);
            if (scene.sequence.parts.is_root(part)) {
              const auto* seeded = r.head_tracks.find(id, t);
              REQUIRE(seeded);
              CHECK(seeded->at(part) == j);
            }
          }
      CHECK(track(scene.sequence, trained(), cfg).tracks == r.tracks);
    }
  }
}

TEST_CASE("removing a person removes exactly that person") {
  const auto scene = clean(3, 21, 4);
  const int neck = *scene.sequence.parts.anchor_root();
  const auto base = track(scene.sequence, trained(), config(ModelVariant::BuSparse)).tracks;
  // Person 1 is the middle one; its detections are the ones on its joints.
  Sequence seq = scene.sequence.filtered([&](const Detection& d) {
    return scene.truth.frames[static_cast<std::size_t>(d.frame)][1].joints.at(d.part).pos != d.pos;
  });
  const auto cut = track(seq, trained(), config(ModelVariant::BuSparse)).tracks;
  const auto base_ids = identify(base, scene.truth, neck), cut_ids = identify(cut, scene.truth, neck);
  std::set<int> before, after;
  for (const auto& [_, p] : base_ids) before.insert(p);
  for (const auto& [_, p] : cut_ids) after.insert(p);
  CHECK(before == std::set<int>{0, 1, 2});
  CHECK(after == std::set<int>{0, 2});
  for (const auto& [cut_id, person] : cut_ids)
    for (const auto& [base_id, p] : base_ids)
      if (p == person) CHECK(cut.persons.at(cut_id) == base.persons.at(base_id));
}

TEST_CASE("edge cases") {
  Sequence empty;
  empty.parts = PartVocabulary::standard14();
  CHECK(track(empty, trained(), config(ModelVariant::BuSparse)).tracks.empty());
  CHECK(track(empty, trained(), config(ModelVariant::TdBu)).tracks.empty());

  Sequence no_roots;
  no_roots.parts = PartVocabulary::generic(3);
  CHECK_THROWS_AS(seed_head_tracks(no_roots, trained(), config(ModelVariant::BuSparse)), ConfigError);

  auto bad = config(ModelVariant::BuSparse);
  bad.overlap = bad.window;
  CHECK_THROWS_AS(bad.check(), ConfigError);

  // One detection seeded into two tracks.
  const auto scene = clean(1, 2);
  const auto& neck_det = scene.sequence.frames[0][0];
  TrackSet heads;
  heads.set(0, 0, neck_det.part, {neck_det.pos, neck_det.score, neck_det.node_id});
  heads.set(1, 0, neck_det.part, {neck_det.pos, neck_det.score, neck_det.node_id});
  CHECK_THROWS_AS(track_full(scene.sequence, trained(), heads, config(ModelVariant::BuSparse)), InfeasibleError);
}
