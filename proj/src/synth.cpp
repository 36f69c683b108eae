#include "arttrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "arttrack/errors.hpp"

namespace arttrack {

namespace {

// Explicit conversions so the output does not depend on the standard
// library's distribution implementations.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    const double u = 1.0 - uniform();  // (0, 1]
    const double v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }
  std::uint64_t below(std::uint64_t n) { return rng_() % n; }

 private:
  std::mt19937_64 rng_;
};

constexpr double kX0 = 150.0;
constexpr double kY0 = 120.0;
constexpr double kMotionRadius = 40.0;
constexpr double kGridReach = 64.0;
constexpr double kMinAttachment = 0.05;

Point down(double angle, double length) { return {length * std::sin(angle), length * std::cos(angle)}; }
Point add(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }

struct PersonMotion {
  double velocity;
  double phase;
  double swing_phase;
};

Pose skeleton_pose(const PartVocabulary& parts, const SkeletonLengths& len, Point neck, double s) {
  Pose pose;
  auto put = [&](const char* name, Point p) { pose[parts.require(name)] = {p, 1.0, -1}; };
  put("neck", neck);
  put("head_top", add(neck, {0, -len.head}));
  const Point rs = add(neck, {-len.shoulder, 4}), ls = add(neck, {len.shoulder, 4});
  put("r_shoulder", rs);
  put("l_shoulder", ls);
  const Point re = add(rs, down(-0.15 + s, len.upper_arm)), le = add(ls, down(0.15 - s, len.upper_arm));
  put("r_elbow", re);
  put("l_elbow", le);
  put("r_wrist", add(re, down(-0.1 + 1.4 * s, len.forearm)));
  put("l_wrist", add(le, down(0.1 - 1.4 * s, len.forearm)));
  const Point hc = add(neck, {0, len.torso});
  const Point rh = add(hc, {-len.hip, 0}), lh = add(hc, {len.hip, 0});
  put("r_hip", rh);
  put("l_hip", lh);
  const Point rk = add(rh, down(-0.6 * s, len.thigh)), lk = add(lh, down(0.6 * s, len.thigh));
  put("r_knee", rk);
  put("l_knee", lk);
  put("r_ankle", add(rk, down(-0.3 * s, len.shin)));
  put("l_ankle", add(lk, down(0.3 * s, len.shin)));
  return pose;
}

// Displacement of the nearest annotated joint within reach, else zero.
Point motion_at(Point q, const std::vector<GtPerson>& from, const std::vector<GtPerson>& to) {
  double best = kMotionRadius;
  Point disp{0, 0};
  for (std::size_t p = 0; p < from.size(); ++p)
    for (const auto& [part, j] : from[p].joints) {
      const double d = distance(q, j.pos);
      if (d <= best) {
        best = d;
        const auto& target = to[p].joints.at(part).pos;
        disp = {target.x - j.pos.x, target.y - j.pos.y};
      }
    }
  return disp;
}

bool near_any(Point q, const std::vector<GtPerson>& people) {
  for (const auto& person : people)
    for (const auto& [_, j] : person.joints)
      if (distance(q, j.pos) <= kGridReach) return true;
  return false;
}

}  // namespace

void SynthConfig::check() const {
  if (persons < 0 || frames < 0) throw ConfigError("persons and frames must be non-negative");
  if (!(sigma >= 0)) throw ConfigError("sigma must be non-negative");
  for (double r : {miss_rate, clutter_rate})
    if (!(r >= 0 && r <= 1)) throw ConfigError("miss and clutter rates must lie in [0, 1]");
  if (descriptor_dim < 1) throw ConfigError("descriptor_dim must be positive");
  if (!(grid_step > 0)) throw ConfigError("grid_step must be positive");
  if (!(spacing >= 0) || !(motion_amplitude >= 0)) throw ConfigError("spacing and amplitude must be non-negative");
  const auto& s = skeleton;
  for (double v : {s.head, s.shoulder, s.upper_arm, s.forearm, s.torso, s.hip, s.thigh, s.shin})
    if (!(v > 0)) throw ConfigError("skeleton lengths must be positive");
}

SynthScene synth_generate(const SynthConfig& cfg) {
  cfg.check();
  Stream rng(cfg.seed);
  SynthScene scene;
  auto& seq = scene.sequence;
  seq.parts = PartVocabulary::standard14();
  const int anchor = *seq.parts.anchor_root();
  const auto& len = cfg.skeleton;
  const double width = 2 * kX0 + cfg.spacing * std::max(0, cfg.persons - 1);
  const double height = kY0 + len.torso + len.thigh + len.shin + 100.0;
  const double w = 2 * std::numbers::pi / 20.0;
  const double ws = 2 * std::numbers::pi / 12.0;

  std::vector<PersonMotion> motion;
  std::vector<std::vector<std::vector<double>>> base(static_cast<std::size_t>(cfg.persons));
  for (int p = 0; p < cfg.persons; ++p) {
    motion.push_back({rng.uniform(-1.5, 1.5), rng.uniform(0, 2 * std::numbers::pi),
                      rng.uniform(0, 2 * std::numbers::pi)});
    for (int k = 0; k < seq.parts.size(); ++k) {
      std::vector<double> v(static_cast<std::size_t>(cfg.descriptor_dim));
      for (auto& x : v) x = rng.uniform();
      base[static_cast<std::size_t>(p)].push_back(std::move(v));
    }
  }

  auto& gt = scene.truth;
  for (int t = 0; t < cfg.frames; ++t) {
    gt.frames.emplace_back();
    for (int p = 0; p < cfg.persons; ++p) {
      const auto& m = motion[static_cast<std::size_t>(p)];
      const Point neck{kX0 + p * cfg.spacing + m.velocity * t + cfg.motion_amplitude * std::sin(w * t + m.phase),
                       kY0 + 0.25 * cfg.motion_amplitude * std::sin(2 * w * t + m.phase)};
      const double swing = 0.4 * std::sin(ws * t + m.swing_phase);
      gt.frames.back().push_back({p, len.head, skeleton_pose(seq.parts, len, neck, swing)});
    }
  }

  // Detections. Every random draw happens regardless of the rates so that
  // scenes differing only in rates share their geometry.
  std::int64_t next_id = 0;
  seq.frames.resize(static_cast<std::size_t>(cfg.frames));
  std::vector<std::vector<int>> owner(static_cast<std::size_t>(cfg.frames));  // person or -1
  for (int t = 0; t < cfg.frames; ++t) {
    struct Pending {
      Detection det;
      int person;
      std::vector<std::vector<double>> desc;
    };
    std::vector<Pending> pending;
    for (const auto& person : gt.frames[static_cast<std::size_t>(t)])
      for (const auto& [part, joint] : person.joints) {
        const double nx = rng.normal(), ny = rng.normal();
        const double score = rng.uniform(0.75, 0.99);
        const bool missed = rng.uniform() < cfg.miss_rate;
        std::vector<std::vector<double>> desc{base[static_cast<std::size_t>(person.id)][static_cast<std::size_t>(part)]};
        for (auto& x : desc[0]) x += 0.03 * rng.normal();
        if (rng.uniform() < 0.2) {
          std::vector<double> extra(static_cast<std::size_t>(cfg.descriptor_dim));
          for (auto& x : extra) x = rng.uniform();
          desc.push_back(std::move(extra));
        }
        const bool clutter = rng.uniform() < cfg.clutter_rate;
        const Point cpos{rng.uniform(0, width), rng.uniform(0, height)};
        const double cscore = rng.uniform(0.05, 0.7);
        std::vector<double> cdesc(static_cast<std::size_t>(cfg.descriptor_dim));
        for (auto& x : cdesc) x = rng.uniform();
        if (!missed)
          pending.push_back({{0, t, {joint.pos.x + cfg.sigma * nx, joint.pos.y + cfg.sigma * ny}, score, part},
                             person.id,
                             std::move(desc)});
        if (clutter) pending.push_back({{0, t, cpos, cscore, part}, -1, {std::move(cdesc)}});
      }
    for (std::size_t i = pending.size(); i > 1; --i) std::swap(pending[i - 1], pending[rng.below(i)]);
    for (auto& pd : pending) {
      pd.det.node_id = next_id++;
      seq.frames[static_cast<std::size_t>(t)].push_back(pd.det);
      seq.descriptors[pd.det.node_id] = {pd.det.node_id, std::move(pd.desc)};
      owner[static_cast<std::size_t>(t)].push_back(pd.person);
    }
  }

  // Dense matches between consecutive frames from the true motion field.
  for (int t = 0; t + 1 < cfg.frames; ++t) {
    const auto& now = gt.frames[static_cast<std::size_t>(t)];
    const auto& next = gt.frames[static_cast<std::size_t>(t + 1)];
    CorrespondenceSet fwd{t, FlowDirection::Forward, {}}, rev{t, FlowDirection::Reverse, {}};
    for (double y = 0; y <= height; y += cfg.grid_step)
      for (double x = 0; x <= width; x += cfg.grid_step) {
        const Point q{x, y};
        if (near_any(q, now)) fwd.pairs.push_back({q, add(q, motion_at(q, now, next))});
        if (near_any(q, next)) rev.pairs.push_back({q, add(q, motion_at(q, next, now))});
      }
    seq.correspondences.push_back(std::move(fwd));
    seq.correspondences.push_back(std::move(rev));
  }

  // Person-conditioned attachment probabilities for detected necks of real
  // persons: a Gaussian of the distance to that person's annotated joint.
  const double spread = 0.5 * len.head;
  for (int t = 0; t < cfg.frames; ++t) {
    const auto& dets = seq.frames[static_cast<std::size_t>(t)];
    const auto& own = owner[static_cast<std::size_t>(t)];
    for (std::size_t r = 0; r < dets.size(); ++r) {
      if (dets[r].part != anchor || own[r] < 0) continue;
      const auto& person = gt.frames[static_cast<std::size_t>(t)][static_cast<std::size_t>(own[r])];
      for (std::size_t d = 0; d < dets.size(); ++d) {
        if (dets[d].part == anchor) continue;
        const double dist = distance(dets[d].pos, person.joints.at(dets[d].part).pos);
        const double p = std::clamp(0.98 * std::exp(-dist * dist / (2 * spread * spread)), 0.02, 0.98);
        if (p > kMinAttachment) seq.attachments.push_back({dets[r].node_id, dets[d].node_id, p});
      }
    }
  }
  return scene;
}

}  // namespace arttrack
