#include "arttrack/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "arttrack/errors.hpp"

namespace arttrack {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Ordering on pose geometry, used to break score ties independently of ids.
bool pose_before(const Pose& a, const Pose& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](const auto& x, const auto& y) {
    return std::tie(x.first, x.second.pos.x, x.second.pos.y, x.second.score) <
           std::tie(y.first, y.second.pos.x, y.second.pos.y, y.second.score);
  });
}

}  // namespace

bool match_pckh(Point pred, Point gt, double head_size, double alpha) {
  if (!(head_size > 0)) throw DomainError("head size must be positive");
  return distance(pred, gt) <= alpha * head_size;
}

std::vector<PosePrediction> predictions_from_tracks(const TrackSet& tracks) {
  std::vector<PosePrediction> out;
  for (const auto& [id, frames] : tracks.persons)
    for (const auto& [frame, pose] : frames) {
      if (pose.empty()) continue;
      double s = 0.0;
      for (const auto& [_, j] : pose) s += j.score;
      out.push_back({frame, s / static_cast<double>(pose.size()), pose});
    }
  return out;
}

double average_precision(std::vector<std::pair<double, bool>> ranked, std::size_t positives) {
  if (positives == 0) return kNaN;
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<double> precision, recall;
  std::size_t tp = 0;
  // Tied scores form one operating point.
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    tp += ranked[k].second;
    if (k + 1 < ranked.size() && ranked[k + 1].first == ranked[k].first) continue;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
  }
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < recall.size(); ++k) {
    ap += (recall[k] - prev) * precision[k];
    prev = recall[k];
  }
  return ap;
}

ApReport ap_per_part(const std::vector<PosePrediction>& predictions, const GroundTruth& gt, int part_count,
                     double alpha) {
  gt.check();
  const auto parts = static_cast<std::size_t>(part_count);
  ApReport report;
  report.annotations.assign(parts, 0);
  for (const auto& frame : gt.frames)
    for (const auto& person : frame)
      for (const auto& [p, _] : person.joints)
        if (p >= 0 && static_cast<std::size_t>(p) < parts) ++report.annotations[static_cast<std::size_t>(p)];

  std::vector<std::vector<std::pair<double, bool>>> ranked(parts);
  std::map<int, std::vector<PosePrediction>> by_frame;
  for (const auto& pred : predictions) {
    PosePrediction kept{pred.frame, pred.score, {}};
    for (const auto& [p, j] : pred.joints)
      if (!gt.ignored(pred.frame, j.pos)) kept.joints[p] = j;
    if (!kept.joints.empty()) by_frame[pred.frame].push_back(std::move(kept));
  }

  for (auto& [frame, preds] : by_frame) {
    std::sort(preds.begin(), preds.end(), [](const PosePrediction& a, const PosePrediction& b) {
      if (a.score != b.score) return a.score > b.score;
      return pose_before(a.joints, b.joints);
    });
    static const std::vector<GtPerson> kNone;
    const auto& people = frame >= 0 && frame < gt.frame_count() ? gt.frames[static_cast<std::size_t>(frame)] : kNone;
    std::vector<bool> taken(people.size(), false);
    for (const auto& pred : preds) {
      int best = -1, best_hits = 0;
      for (std::size_t g = 0; g < people.size(); ++g) {
        if (taken[g]) continue;
        int shared = 0, hits = 0;
        for (const auto& [p, j] : pred.joints) {
          const auto it = people[g].joints.find(p);
          if (it == people[g].joints.end()) continue;
          ++shared;
          hits += match_pckh(j.pos, it->second.pos, people[g].head_size, alpha);
        }
        if (2 * hits > shared && hits > best_hits) {
          best = static_cast<int>(g);
          best_hits = hits;
        }
      }
      if (best >= 0) taken[static_cast<std::size_t>(best)] = true;
      for (const auto& [p, j] : pred.joints) {
        if (p < 0 || static_cast<std::size_t>(p) >= parts) continue;
        bool tp = false;
        if (best >= 0) {
          const auto& person = people[static_cast<std::size_t>(best)];
          const auto it = person.joints.find(p);
          tp = it != person.joints.end() && match_pckh(j.pos, it->second.pos, person.head_size, alpha);
        }
        ranked[static_cast<std::size_t>(p)].emplace_back(j.score, tp);
      }
    }
  }

  double sum = 0.0;
  int counted = 0;
  for (std::size_t p = 0; p < parts; ++p) {
    report.per_part.push_back(average_precision(ranked[p], report.annotations[p]));
    if (!std::isnan(report.per_part.back())) {
      sum += report.per_part.back();
      ++counted;
    }
  }
  report.mean = counted ? sum / counted : kNaN;
  return report;
}

// ---------------------------------------------------------------------------

std::vector<int> solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t rows = cost.size();
  if (rows == 0) return {};
  const std::size_t cols = cost.front().size();
  for (const auto& r : cost)
    if (r.size() != cols) throw StructuralError("ragged assignment matrix");
  if (rows > cols) {
    std::vector<std::vector<double>> t(cols, std::vector<double>(rows));
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) t[j][i] = cost[i][j];
    const auto tc = solve_assignment(t);
    std::vector<int> out(rows, -1);
    for (std::size_t j = 0; j < cols; ++j)
      if (tc[j] >= 0) out[static_cast<std::size_t>(tc[j])] = static_cast<int>(j);
    return out;
  }
  // Shortest augmenting paths with potentials, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<std::size_t> match(cols + 1, 0), way(cols + 1, 0);
  for (std::size_t i = 1; i <= rows; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<bool> used(cols + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> out(rows, -1);
  for (std::size_t j = 1; j <= cols; ++j)
    if (match[j]) out[match[j] - 1] = static_cast<int>(j - 1);
  return out;
}

namespace {

struct Target {
  int id;
  Point pos;
  double head_size;
};

struct Hypothesis {
  int id;
  Point pos;
};

// Pairs (target index, hypothesis index) among the free ones, gated.
std::vector<std::pair<std::size_t, std::size_t>> match_free(const std::vector<Target>& targets,
                                                            const std::vector<Hypothesis>& hyps,
                                                            const std::vector<bool>& target_free,
                                                            const std::vector<bool>& hyp_free, double alpha,
                                                            bool hungarian) {
  std::vector<std::size_t> ti, hi;
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (target_free[i]) ti.push_back(i);
  for (std::size_t j = 0; j < hyps.size(); ++j)
    if (hyp_free[j]) hi.push_back(j);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (ti.empty() || hi.empty()) return out;

  auto gated = [&](std::size_t a, std::size_t b) {
    return match_pckh(hyps[b].pos, targets[a].pos, targets[a].head_size, alpha);
  };
  if (hungarian) {
    // Ungated pairs cost more than any set of gated ones, so the number of
    // matches is maximized before the total distance.
    double total = 1.0;
    for (auto a : ti)
      for (auto b : hi) total += distance(targets[a].pos, hyps[b].pos);
    std::vector<std::vector<double>> cost(ti.size(), std::vector<double>(hi.size()));
    for (std::size_t r = 0; r < ti.size(); ++r)
      for (std::size_t c = 0; c < hi.size(); ++c)
        cost[r][c] = gated(ti[r], hi[c]) ? distance(targets[ti[r]].pos, hyps[hi[c]].pos) : total;
    const auto assign = solve_assignment(cost);
    for (std::size_t r = 0; r < ti.size(); ++r)
      if (assign[r] >= 0 && gated(ti[r], hi[static_cast<std::size_t>(assign[r])]))
        out.emplace_back(ti[r], hi[static_cast<std::size_t>(assign[r])]);
    return out;
  }

  struct Cand {
    double d;
    std::size_t a, b;
  };
  std::vector<Cand> cands;
  for (auto a : ti)
    for (auto b : hi)
      if (gated(a, b)) cands.push_back({distance(targets[a].pos, hyps[b].pos), a, b});
  std::sort(cands.begin(), cands.end(), [&](const Cand& x, const Cand& y) {
    if (x.d != y.d) return x.d < y.d;
    if (targets[x.a].id != targets[y.a].id) return targets[x.a].id < targets[y.a].id;
    const auto& px = hyps[x.b].pos;
    const auto& py = hyps[y.b].pos;
    return std::tie(px.x, px.y) < std::tie(py.x, py.y);
  });
  std::vector<bool> ta(targets.size(), false), hb(hyps.size(), false);
  for (const auto& c : cands) {
    if (ta[c.a] || hb[c.b]) continue;
    ta[c.a] = hb[c.b] = true;
    out.emplace_back(c.a, c.b);
  }
  return out;
}

double mota_value(const PartMota& m) {
  if (m.annotations == 0) return kNaN;
  return 1.0 - static_cast<double>(m.misses + m.false_positives + m.id_switches) / static_cast<double>(m.annotations);
}

}  // namespace

MotaReport mota(const TrackSet& tracks, const GroundTruth& gt, int part_count, const MotaOptions& options) {
  gt.check();
  MotaReport report;
  const int frames = std::max(gt.frame_count(), tracks.frame_span());
  for (int part = 0; part < part_count; ++part) {
    PartMota m;
    m.part = part;
    std::map<int, int> last;  // target id -> hypothesis id
    for (int t = 0; t < frames; ++t) {
      std::vector<Target> targets;
      if (t < gt.frame_count())
        for (const auto& person : gt.frames[static_cast<std::size_t>(t)])
          if (auto it = person.joints.find(part); it != person.joints.end())
            targets.push_back({person.id, it->second.pos, person.head_size});
      std::vector<Hypothesis> hyps;
      for (const auto& [id, byframe] : tracks.persons) {
        const auto f = byframe.find(t);
        if (f == byframe.end()) continue;
        const auto j = f->second.find(part);
        if (j == f->second.end() || gt.ignored(t, j->second.pos)) continue;
        hyps.push_back({id, j->second.pos});
      }

      std::vector<bool> target_free(targets.size(), true), hyp_free(hyps.size(), true);
      // Keep last frame's correspondences that are still valid.
      for (std::size_t a = 0; a < targets.size(); ++a) {
        const auto prev = last.find(targets[a].id);
        if (prev == last.end()) continue;
        for (std::size_t b = 0; b < hyps.size(); ++b)
          if (hyp_free[b] && hyps[b].id == prev->second &&
              match_pckh(hyps[b].pos, targets[a].pos, targets[a].head_size, options.alpha)) {
            target_free[a] = hyp_free[b] = false;
            break;
          }
      }
      for (const auto& [a, b] : match_free(targets, hyps, target_free, hyp_free, options.alpha, options.hungarian)) {
        target_free[a] = hyp_free[b] = false;
        const auto prev = last.find(targets[a].id);
        if (prev != last.end() && prev->second != hyps[b].id) {
          ++m.id_switches;
          ++report.switches_by_target[{targets[a].id, part}];
        }
        last[targets[a].id] = hyps[b].id;
      }
      m.annotations += static_cast<long>(targets.size());
      m.misses += std::count(target_free.begin(), target_free.end(), true);
      m.false_positives += std::count(hyp_free.begin(), hyp_free.end(), true);
    }
    m.mota = mota_value(m);
    report.parts.push_back(m);
  }

  PartMota& avg = report.average;
  double sum = 0.0;
  int counted = 0;
  for (const auto& m : report.parts) {
    avg.misses += m.misses;
    avg.false_positives += m.false_positives;
    avg.id_switches += m.id_switches;
    avg.annotations += m.annotations;
    if (!std::isnan(m.mota)) {
      sum += m.mota;
      ++counted;
    }
  }
  avg.mota = counted ? sum / counted : kNaN;
  return report;
}

}  // namespace arttrack
