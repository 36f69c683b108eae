// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. An optional argument names the CLI binary; the
// determinism check then also runs every subcommand twice and compares the
// output files byte for byte.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "arttrack/core_model.hpp"
#include "arttrack/errors.hpp"
#include "arttrack/evaluation.hpp"
#include "arttrack/graph_builder.hpp"
#include "arttrack/io.hpp"
#include "arttrack/logistic.hpp"
#include "arttrack/multicut_solver.hpp"
#include "arttrack/pipeline.hpp"
#include "arttrack/synth.hpp"
#include "arttrack/temporal_features.hpp"
#include "support.hpp"

using namespace arttrack;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << v;
  return s.str();
}

double normal(std::mt19937_64& rng) {
  const double u = testing::uniform(rng, 1e-12, 1.0);
  const double v = testing::uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

SynthConfig noisy(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.sigma = 4;
  cfg.miss_rate = 0.1;
  cfg.clutter_rate = 0.1;
  cfg.seed = seed;
  return cfg;
}

CostModels train_on(const char* features) {
  std::vector<std::pair<Sequence, GroundTruth>> data;
  for (std::uint64_t seed = 100; seed < 103; ++seed) {
    auto scene = synth_generate(noisy(seed));
    data.emplace_back(std::move(scene.sequence), std::move(scene.truth));
  }
  PairwiseTraining training;
  training.features = FeatureSet::parse(features);
  return train_cost_models(data, training);
}

const CostModels& full_models() {
  static const CostModels m = train_on("l2,sift,dm");
  return m;
}

SequenceConfig variant(ModelVariant v) {
  SequenceConfig cfg;
  cfg.model = v;
  return cfg;
}

Outcome oracle_equivalence() {
  std::mt19937_64 rng(7001);
  const int trials = 200;
  int optimal = 0, infeasible = 0;
  for (int k = 0; k < trials; ++k) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const auto g = testing::random_instance(rng, {.nodes = n, .constrained_fraction = 0.3});
    SolverParams params;
    params.seed = static_cast<std::uint64_t>(k);
    const auto exact = solve_exact(g, params);
    const auto local = solve_local_search(g, params);
    if (!validate(g, local).empty()) ++infeasible;
    if (objective(g, local) - objective(g, exact) <= 1e-9) ++optimal;
  }
  return {optimal * 10 >= trials * 9 && infeasible == 0,
          std::to_string(optimal) + "/" + std::to_string(trials) + " optimal, " + std::to_string(infeasible) +
              " infeasible"};
}

Outcome feasibility_fuzzing() {
  std::mt19937_64 rng(7002);
  int bad = 0, outputs = 0;
  for (int k = 0; k < 1000; ++k) {
    const int n = 1 + static_cast<int>(rng() % 200);
    testing::RandomInstanceSpec spec{.nodes = n, .constrained_fraction = 0.3};
    if (n > 12) spec.max_degree = 8;
    const auto g = testing::random_instance(rng, spec);
    SolverParams params;
    params.seed = static_cast<std::uint64_t>(k);
    std::vector<Solution> sols{solve_local_search(g, params)};
    if (k % 10 == 0) sols.push_back(solve_best_of_seeds(g, params, 3));
    if (n <= params.max_exact_nodes) sols.push_back(solve_exact(g, params));
    for (const auto& s : sols) {
      ++outputs;
      if (!validate(g, s).empty()) ++bad;
    }
  }
  return {bad == 0, std::to_string(bad) + " of " + std::to_string(outputs) + " solver outputs with violations"};
}

Outcome cycle_cross_check() {
  std::mt19937_64 rng(7003);
  std::size_t cycles = 0, violations = 0;
  for (int k = 0; k < 300; ++k) {
    const int n = 3 + static_cast<int>(rng() % 6);
    const auto g = testing::random_instance(rng, {.nodes = n, .edge_probability = 0.6, .constrained_fraction = 0});
    const auto all = testing::enumerate_cycles(g);
    cycles += all.size();
    // Solver output and a random connected partition of the selected nodes.
    SolverParams params;
    params.seed = static_cast<std::uint64_t>(k);
    violations += testing::cycle_violations(all, edge_labels(g, solve_exact(g, params)));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng() % 4) - 1;
    violations += testing::cycle_violations(all, edge_labels(g, Solution(labels)));
  }
  // The oracle itself must notice a lone cut edge on a 4-cycle.
  const auto square = ProblemGraph::untyped({0, 0, 0, 0}, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {0, 3, 1}});
  const bool sensitive = testing::cycle_violations(testing::enumerate_cycles(square), {1, 1, 1, 0}) > 0;
  return {violations == 0 && sensitive && cycles > 0,
          std::to_string(cycles) + " cycles, " + std::to_string(violations) + " violated inequalities"};
}

Outcome logistic_training() {
  std::mt19937_64 rng(7004);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    rows.push_back({normal(rng), normal(rng), normal(rng), normal(rng)});
    labels.push_back(static_cast<int>(rng() % 2));
  }
  const LogisticLoss loss(rows, labels, 0.05);
  double worst = 0.0;
  for (int point = 0; point < 10; ++point) {
    std::vector<double> w(loss.dimension());
    for (auto& x : w) x = testing::uniform(rng, -2, 2);
    const auto g = loss.gradient(w);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double h = 1e-5;
      auto wp = w, wm = w;
      wp[k] += h;
      wm[k] -= h;
      const double fd = (loss.value(wp) - loss.value(wm)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[k]) / std::max(1e-8, std::max(std::abs(fd), std::abs(g[k]))));
    }
  }

  std::vector<EdgeFeatureVector> samples;
  std::vector<int> ys;
  for (int i = 0; i < 500; ++i) {
    const int y = i % 2;
    const double c = y ? 2.5 : -2.5;
    samples.push_back({"blobs", {"a", "b", "c"}, {c + 0.6 * normal(rng), -c + 0.6 * normal(rng), normal(rng)}});
    ys.push_back(y);
  }
  const double acc = accuracy(train_logistic(samples, ys), samples, ys);
  return {worst <= 1e-4 && acc >= 0.99, "max relative gradient error " + sci(worst) +
                                            ", separable accuracy " + fmt(acc)};
}

Outcome temporal_features() {
  std::mt19937_64 rng(7005);
  auto inside = [](Point p, Point c, double side) {
    return std::abs(p.x - c.x) <= side / 2 && std::abs(p.y - c.y) <= side / 2;
  };
  int mismatches = 0, over = 0;
  double largest = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Point ci{testing::uniform(rng, 0, 80), testing::uniform(rng, 0, 80)};
    const Point cj{ci.x + testing::uniform(rng, -10, 10), ci.y + testing::uniform(rng, -10, 10)};
    const double side = std::round(testing::uniform(rng, 4, 40));
    std::vector<Correspondence> corr;
    const int n = static_cast<int>(rng() % 80);
    for (int k = 0; k < n; ++k) {
      Point a{std::round(testing::uniform(rng, 0, 80)), std::round(testing::uniform(rng, 0, 80))};
      // Mostly coherent flow so the numerator is not always zero.
      Point b = k % 3 ? Point{a.x + cj.x - ci.x, a.y + cj.y - ci.y}
                      : Point{testing::uniform(rng, 0, 80), testing::uniform(rng, 0, 80)};
      corr.push_back({a, b});
    }
    int both = 0, starts = 0, ends = 0;
    for (const auto& [a, b] : corr) {
      const bool s = inside(a, ci, side), e = inside(b, cj, side);
      both += s && e;
      starts += s;
      ends += e;
    }
    const double expected = starts + ends == 0 ? 0.0 : static_cast<double>(both) / (starts + ends);
    const double got = delta_dm(corr, {ci, side}, {cj, side});
    mismatches += got != expected;
    over += got > 0.5;
    largest = std::max(largest, got);
  }
  return {mismatches == 0 && over == 0, std::to_string(mismatches) + " mismatches, max delta_dm " + fmt(largest)};
}

Outcome zero_noise_tracking() {
  const auto scene = synth_generate(SynthConfig{});
  const int parts = scene.sequence.parts.size();
  std::string detail;
  bool ok = true;
  for (auto v : {ModelVariant::BuFull, ModelVariant::BuSparse, ModelVariant::TdBu}) {
    const auto r = track(scene.sequence, full_models(), variant(v));
    const auto m = mota(r.tracks, scene.truth, parts);
    const auto ap = ap_per_part(predictions_from_tracks(r.tracks), scene.truth, parts);
    bool all_one = true;
    for (const auto& p : m.parts) all_one = all_one && p.mota == 1.0;
    for (double a : ap.per_part) all_one = all_one && a == 1.0;
    ok = ok && all_one;
    detail += std::string(detail.empty() ? "" : ", ") + std::string(to_string(v)) + " MOTA " +
              fmt(m.average.mota, 3) + " AP " + fmt(100 * ap.mean, 1) + "%";
  }
  return {ok, detail};
}

Outcome noisy_ablation() {
  const auto l2 = train_on("l2");
  double full_sum = 0.0, l2_sum = 0.0;
  const int seeds = 10;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const auto scene = synth_generate(noisy(seed));
    const int parts = scene.sequence.parts.size();
    full_sum += mota(track(scene.sequence, full_models(), {}).tracks, scene.truth, parts).average.mota;
    l2_sum += mota(track(scene.sequence, l2, {}).tracks, scene.truth, parts).average.mota;
  }
  const double full = full_sum / seeds, alone = l2_sum / seeds;
  return {full >= alone, "mean MOTA l2,sift,dm " + fmt(full) + " vs l2 " + fmt(alone)};
}

Outcome sparse_vs_full() {
  SynthConfig cfg;
  cfg.persons = 5;
  cfg.sigma = 2;
  cfg.seed = 11;
  const auto scene = synth_generate(cfg);
  // Median of a few runs; the graphs are identical each time.
  auto solve_ms = [&](ModelVariant v) {
    std::vector<double> times;
    for (int rep = 0; rep < 5; ++rep) times.push_back(track(scene.sequence, full_models(), variant(v)).timings.solve_ms);
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };
  const double sparse = solve_ms(ModelVariant::BuSparse);
  const double full = solve_ms(ModelVariant::BuFull);
  const double per_frame = sparse / cfg.frames;
  return {sparse < full && per_frame <= 1000.0, "solve ms sparse " + fmt(sparse, 1) + " vs full " + fmt(full, 1) +
                                                    ", sparse " + fmt(per_frame, 2) + " ms/frame"};
}

Outcome tdbu_exclusivity() {
  int joined = 0, shared = 0, bad_heads = 0, instances = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto cfg = noisy(500 + seed);
    cfg.persons = 2 + static_cast<int>(seed % 3);
    cfg.frames = 9;
    const auto scene = synth_generate(cfg);
    const auto& seq = scene.sequence;
    const int anchor = *seq.parts.anchor_root();

    // The bare TD/BU instance over the whole scene.
    const auto g = build_tdbu(seq, full_models());
    SolverParams params;
    params.seed = seed;
    const auto sol = drop_rootless(g, solve_local_search(g, params));
    ++instances;
    for (const auto& cluster : sol.clusters()) {
      std::set<int> frames;
      for (auto i : cluster) {
        const auto& d = g.detection(i);
        if (d.part == anchor && !frames.insert(d.frame).second) ++joined;
      }
    }

    // The full pipeline: every output person is one head track, every
    // node is used once, and root joints are the seeded ones.
    const auto r = track(seq, full_models(), variant(ModelVariant::TdBu));
    std::set<std::int64_t> used;
    for (const auto& [id, frames] : r.tracks.persons) {
      if (!r.head_tracks.persons.count(id)) ++bad_heads;
      for (const auto& [t, pose] : frames)
        for (const auto& [part, j] : pose) {
          if (!used.insert(j.node).second) ++shared;
          if (!seq.parts.is_root(part)) continue;
          const auto* seeded = r.head_tracks.find(id, t);
          if (!seeded || !seeded->count(part) || !(seeded->at(part) == j)) ++bad_heads;
        }
    }
  }
  return {joined == 0 && shared == 0 && bad_heads == 0,
          std::to_string(instances) + " scenes: " + std::to_string(joined) + " same-frame root joins, " +
              std::to_string(shared) + " shared nodes, " + std::to_string(bad_heads) + " head-track mismatches"};
}

std::map<std::string, std::string> library_outputs() {
  std::map<std::string, std::string> out;
  auto put = [&](const std::string& name, auto&& write) {
    std::ostringstream s;
    write(s);
    out[name] = s.str();
  };
  const auto scene = synth_generate(noisy(42));
  const auto& seq = scene.sequence;
  const auto models = train_on("l2,sift,dm");
  put("detections", [&](auto& s) { io::write_detections(s, seq); });
  put("models", [&](auto& s) { io::write_models(s, models, seq.parts); });
  const auto g = build_bu(seq, models, SparsityPattern::kinematic_tree(seq.parts));
  put("graph", [&](auto& s) { io::write_graph(s, g); });
  SolverParams params;
  params.seed = 3;
  put("solution", [&](auto& s) { io::write_solution(s, g, solve_best_of_seeds(g, params, 2)); });
  for (auto v : {ModelVariant::BuFull, ModelVariant::BuSparse, ModelVariant::TdBu}) {
    const auto r = track(seq, models, variant(v));
    put(std::string("tracks-") + std::string(to_string(v)), [&](auto& s) { io::write_tracks(s, r.tracks, seq.parts); });
    const auto m = mota(r.tracks, scene.truth, seq.parts.size(), {.hungarian = true});
    put(std::string("mota-") + std::string(to_string(v)), [&](auto& s) {
      s.precision(17);
      s << m.average.mota << ' ' << m.average.id_switches;
    });
  }
  return out;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = s.str();
  }
  return files;
}

// Runs every subcommand into `dir`; false if any command fails.
bool cli_run(const std::string& cli, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string();
  const std::vector<std::string> commands = {
      "--seed 9 synth-generate --out-dir " + d + "/scene --sigma 3 --miss-rate 0.1 --clutter-rate 0.1",
      "train-pairwise --scenes " + d + "/scene --out " + d + "/models.jsonl",
      "--model bu-full build-graph --scene " + d + "/scene --models " + d + "/models.jsonl --out " + d +
          "/graph.jsonl",
      "--seed 4 solve --graph " + d + "/graph.jsonl --out " + d + "/solution.jsonl",
      "--model tdbu track --scene " + d + "/scene --models " + d + "/models.jsonl --out " + d +
          "/tracks.jsonl --heads-out " + d + "/heads.jsonl",
      "eval-ap --tracks " + d + "/tracks.jsonl --gt " + d + "/scene/groundtruth.jsonl --out " + d + "/ap.json",
      "--hungarian eval-mota --tracks " + d + "/tracks.jsonl --gt " + d + "/scene/groundtruth.jsonl --out " + d +
          "/mota.json",
      "export-overlay --tracks " + d + "/tracks.jsonl --out " + d + "/overlay.jsonl",
  };
  for (const auto& c : commands)
    if (std::system(("\"" + cli + "\" --summary " + d + "/last_summary.json " + c + " > /dev/null").c_str()) != 0)
      return false;
  fs::remove(dir / "last_summary.json");  // carries timings
  return true;
}

Outcome determinism(const std::string& cli) {
  const auto a = library_outputs(), b = library_outputs();
  bool ok = a == b;
  std::string detail = std::to_string(a.size()) + " library outputs " + (a == b ? "identical" : "differ");
  if (!cli.empty()) {
    const auto base = fs::temp_directory_path() / ("arttrack-acceptance-" + std::to_string(::getpid()));
    const bool ran = cli_run(cli, base / "a") && cli_run(cli, base / "b");
    const auto fa = ran ? read_tree(base / "a") : decltype(read_tree(base)){};
    const auto fb = ran ? read_tree(base / "b") : decltype(read_tree(base)){};
    ok = ok && ran && !fa.empty() && fa == fb;
    detail += ", " + std::to_string(fa.size()) + " CLI output files " +
              (!ran ? "not produced" : fa == fb ? "byte-identical" : "differ");
    fs::remove_all(base);
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle equivalence", oracle_equivalence},
      {"feasibility fuzzing", feasibility_fuzzing},
      {"cycle inequalities", cycle_cross_check},
      {"logistic training", logistic_training},
      {"temporal features", temporal_features},
      {"zero-noise tracking", zero_noise_tracking},
      {"noisy feature ablation", noisy_ablation},
      {"sparse vs full", sparse_vs_full},
      {"TD/BU exclusivity", tdbu_exclusivity},
      {"determinism", [&] { return determinism(cli); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << "criterion " << k + 1 << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[k].first << ": "
              << o.detail << " (" << fmt(secs, 2) << " s)" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
