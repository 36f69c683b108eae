// arttrack command line tool. See README.md for the command overview and
// docs/FORMATS.md for the file formats.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "arttrack/config.hpp"
#include "arttrack/errors.hpp"
#include "arttrack/evaluation.hpp"
#include "arttrack/io.hpp"
#include "arttrack/multicut_solver.hpp"
#include "arttrack/pipeline.hpp"
#include "arttrack/synth.hpp"

namespace fs = std::filesystem;
using namespace arttrack;
using ojson = nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kParse = 2, kInfeasible = 3, kInternal = 4 };

constexpr const char* kVersion = "1.0.0";

// Standard file names inside a scene directory.
constexpr const char* kDetections = "detections.jsonl";
constexpr const char* kDescriptors = "descriptors.jsonl";
constexpr const char* kCorrespondences = "correspondences.jsonl";
constexpr const char* kAttachments = "attachments.jsonl";
constexpr const char* kGroundTruth = "groundtruth.jsonl";

using Clock = std::chrono::steady_clock;

struct Globals {
  std::string model = "bu-sparse";
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string features;
  bool paper_sign = false;
  bool hungarian = false;
  std::string summary = "-";
};

struct SceneArgs {
  std::string scene;
  std::string detections, descriptors, correspondences, attachments, groundtruth;

  void add(CLI::App* cmd, bool with_gt) {
    cmd->add_option("--scene", scene, "Directory with the standard scene file names");
    cmd->add_option("--detections", detections, "Detections file");
    cmd->add_option("--descriptors", descriptors, "Descriptor sidecar");
    cmd->add_option("--correspondences", correspondences, "Correspondence sidecar");
    cmd->add_option("--attachments", attachments, "Attachment sidecar");
    if (with_gt) cmd->add_option("--gt", groundtruth, "Ground-truth file");
  }

  // Explicit paths win; otherwise files present in the scene directory.
  std::string pick(const std::string& explicit_path, const char* name, bool required) const {
    if (!explicit_path.empty()) return explicit_path;
    if (!scene.empty()) {
      const auto p = fs::path(scene) / name;
      if (required || fs::exists(p)) return p.string();
    }
    if (required) throw ConfigError(std::string("missing input: pass --scene or the ") + name + " path");
    return {};
  }

  Sequence load() const {
    return io::load_sequence(pick(detections, kDetections, true), pick(descriptors, kDescriptors, false),
                             pick(correspondences, kCorrespondences, false), pick(attachments, kAttachments, false));
  }

  std::string gt_path() const { return pick(groundtruth, kGroundTruth, true); }
};

class Run {
 public:
  explicit Run(std::string command) {
    summary_["command"] = std::move(command);
    summary_["version"] = kVersion;
  }

  ojson& summary() { return summary_; }
  ojson& timings() { return summary_["timings_ms"]; }

  template <class Fn>
  auto timed(const char* stage, Fn&& fn) {
    const auto start = Clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      add_time(stage, start);
    } else {
      auto out = fn();
      add_time(stage, start);
      return out;
    }
  }

 private:
  void add_time(const char* stage, Clock::time_point start) {
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    auto& t = summary_["timings_ms"];
    t[stage] = (t.contains(stage) ? t[stage].get<double>() : 0.0) + ms;
  }

  ojson summary_;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    io::save_text(path, text);
}

template <class Fn>
void write_to(const std::string& path, Fn&& fn) {
  std::ostringstream out;
  fn(out);
  write_text(path, out.str());
}

ojson number(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

// ---------------------------------------------------------------------------

struct Context {
  Globals g;
  Config config;

  void load_config() {
    if (!g.config_path.empty()) config = arttrack::load_config(g.config_path);
    if (g.seed) {
      config.sequence.solver.seed = *g.seed;
      config.synth.seed = *g.seed;
    }
    if (!g.features.empty()) config.training.features = FeatureSet::parse(g.features);
    if (g.paper_sign) config.sequence.build.convention = CostConvention::Literal;
    if (g.hungarian) config.evaluation.hungarian = true;
    config.sequence.model = model_variant_from_string(g.model);
  }

  // Models from file; --features must agree with the temporal model.
  CostModels models(const std::string& path, const PartVocabulary& parts) const {
    auto m = io::load_models(path, parts);
    if (!g.features.empty() && m.temporal && !(m.temporal->features == FeatureSet::parse(g.features)))
      throw ConfigError("--features " + g.features + " differs from the model's temporal features " +
                        m.temporal->features.to_string());
    return m;
  }
};

void cmd_synth(Context& ctx, Run& run, const std::string& out_dir) {
  const auto scene = run.timed("generate", [&] { return synth_generate(ctx.config.synth); });
  run.timed("write", [&] {
    fs::create_directories(out_dir);
    const auto path = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
    const auto& seq = scene.sequence;
    io::save(path(kDetections), [&](std::ostream& o) { io::write_detections(o, seq); });
    io::save(path(kDescriptors), [&](std::ostream& o) { io::write_descriptors(o, seq); });
    io::save(path(kCorrespondences), [&](std::ostream& o) { io::write_correspondences(o, seq); });
    io::save(path(kAttachments), [&](std::ostream& o) { io::write_attachments(o, seq); });
    io::save(path(kGroundTruth), [&](std::ostream& o) { io::write_ground_truth(o, scene.truth, seq.parts); });
  });
  auto& s = run.summary();
  s["seed"] = ctx.config.synth.seed;
  s["frames"] = scene.sequence.frame_count();
  s["detections"] = scene.sequence.detection_count();
  s["persons"] = ctx.config.synth.persons;
}

void cmd_train(Context& ctx, Run& run, const std::vector<std::string>& scenes, const SceneArgs& single,
               const std::string& out) {
  std::vector<std::pair<Sequence, GroundTruth>> data;
  run.timed("load", [&] {
    auto add = [&](const SceneArgs& a) {
      auto seq = a.load();
      auto gt = io::load_ground_truth(a.gt_path(), seq.parts);
      data.emplace_back(std::move(seq), std::move(gt));
    };
    for (const auto& dir : scenes) {
      SceneArgs a;
      a.scene = dir;
      add(a);
    }
    if (!single.detections.empty() || !single.scene.empty()) add(single);
  });
  if (data.empty()) throw ConfigError("train-pairwise needs at least one --scene or --detections/--gt pair");
  const auto models = run.timed("train", [&] { return train_cost_models(data, ctx.config.training); });
  write_to(out, [&](std::ostream& o) { io::write_models(o, models, data.front().first.parts); });
  auto& s = run.summary();
  s["sequences"] = data.size();
  s["features"] = ctx.config.training.features.to_string();
  s["cross_type_models"] = models.cross_type.size();
}

ProblemGraph build_graph(const Context& ctx, const Sequence& seq, const CostModels& models) {
  const auto& c = ctx.config.sequence;
  switch (c.model) {
    case ModelVariant::BuFull: return build_bu(seq, models, SparsityPattern::all_pairs(), c.build);
    case ModelVariant::BuSparse: return build_bu(seq, models, c.pattern(seq.parts), c.build);
    case ModelVariant::TdBu: return build_tdbu(seq, models, c.build);
  }
  throw Error("unknown model");
}

void cmd_build(Context& ctx, Run& run, const SceneArgs& scene, const std::string& models_path,
               const std::string& out) {
  const auto seq = run.timed("load", [&] { return scene.load(); });
  ctx.config.bind(seq.parts);
  const auto models = run.timed("load", [&] { return ctx.models(models_path, seq.parts); });
  const auto graph = run.timed("build", [&] { return build_graph(ctx, seq, models); });
  write_to(out, [&](std::ostream& o) { io::write_graph(o, graph); });
  auto& s = run.summary();
  s["model"] = std::string(to_string(ctx.config.sequence.model));
  s["nodes"] = graph.size();
  s["edges"] = graph.edges().size();
  s["must_link"] = graph.must_link().size();
  s["must_cut"] = graph.must_cut().size();
}

void cmd_solve(Context& ctx, Run& run, const std::string& graph_path, bool exact, const std::string& out) {
  const auto graph = run.timed("load", [&] { return io::load_graph(graph_path); });
  const auto& params = ctx.config.sequence.solver;
  const auto sol = run.timed("solve", [&] {
    return exact ? solve_exact(graph, params) : solve_best_of_seeds(graph, params, ctx.config.sequence.seeds);
  });
  if (!validate(graph, sol).empty()) throw Error("solver returned an infeasible solution");
  write_to(out, [&](std::ostream& o) { io::write_solution(o, graph, sol); });
  auto& s = run.summary();
  s["solver"] = exact ? "exact" : "local-search";
  s["seed"] = params.seed;
  s["nodes"] = graph.size();
  s["objective"] = objective(graph, sol);
  s["clusters"] = sol.clusters().size();
}

void cmd_oracle(Context& ctx, Run& run, const std::string& graph_path, const std::string& out) {
  const auto graph = run.timed("load", [&] { return io::load_graph(graph_path); });
  auto params = ctx.config.sequence.solver;
  params.max_exact_nodes = SolverParams::kMaxExactNodes;
  const auto exact = run.timed("exact", [&] { return solve_exact(graph, params); });
  const auto local =
      run.timed("local_search", [&] { return solve_best_of_seeds(graph, params, ctx.config.sequence.seeds); });
  const double oe = objective(graph, exact), ol = objective(graph, local);
  ojson report;
  report["nodes"] = graph.size();
  report["exact_objective"] = oe;
  report["local_objective"] = ol;
  report["gap"] = ol - oe;
  report["optimal"] = std::abs(ol - oe) <= 1e-9;
  report["local_feasible"] = validate(graph, local).empty();
  write_text(out, report.dump(2) + "\n");
  for (const auto& [k, v] : report.items()) run.summary()[k] = v;
}

void cmd_track(Context& ctx, Run& run, const SceneArgs& scene, const std::string& models_path,
               const std::string& out, const std::string& heads_out) {
  const auto seq = run.timed("load", [&] { return scene.load(); });
  ctx.config.bind(seq.parts);
  const auto models = run.timed("load", [&] { return ctx.models(models_path, seq.parts); });
  const auto result = track(seq, models, ctx.config.sequence);
  write_to(out, [&](std::ostream& o) { io::write_tracks(o, result.tracks, seq.parts); });
  if (!heads_out.empty())
    io::save(heads_out, [&](std::ostream& o) { io::write_tracks(o, result.head_tracks, seq.parts); });
  auto& t = run.timings();
  t["seed"] = result.timings.seed_ms;
  t["build"] = result.timings.build_ms;
  t["solve"] = result.timings.solve_ms;
  t["extract"] = result.timings.extract_ms;
  t["graph"] = result.timings.seed_ms + result.timings.build_ms + result.timings.solve_ms;
  auto& s = run.summary();
  s["model"] = std::string(to_string(ctx.config.sequence.model));
  s["seed"] = ctx.config.sequence.solver.seed;
  s["frames"] = seq.frame_count();
  s["objective"] = result.objective;
  s["nodes"] = result.nodes;
  s["edges"] = result.edges;
  s["windows"] = result.windows;
  s["head_tracks"] = result.head_tracks.persons.size();
  s["persons"] = result.tracks.persons.size();
  s["score_threshold"] = ctx.config.sequence.score_threshold();
  if (seq.frame_count() > 0) s["graph_ms_per_frame"] = t["graph"].get<double>() / seq.frame_count();
}

void cmd_eval_ap(Context& ctx, Run& run, const std::string& tracks_path, const std::string& gt_path,
                 const std::string& out) {
  const auto parts = io::peek_parts(tracks_path);
  const auto tracks = run.timed("load", [&] { return io::load_tracks(tracks_path, parts); });
  const auto gt = run.timed("load", [&] { return io::load_ground_truth(gt_path, parts); });
  const auto report = run.timed("evaluate", [&] {
    return ap_per_part(predictions_from_tracks(tracks), gt, parts.size(), ctx.config.evaluation.alpha);
  });
  ojson doc;
  doc["alpha"] = ctx.config.evaluation.alpha;
  doc["mean_ap"] = number(report.mean);
  ojson rows = ojson::array();
  for (int k = 0; k < parts.size(); ++k) {
    ojson row;
    row["part"] = parts[k].name;
    row["ap"] = number(report.per_part[static_cast<std::size_t>(k)]);
    row["annotations"] = report.annotations[static_cast<std::size_t>(k)];
    rows.push_back(std::move(row));
  }
  doc["parts"] = std::move(rows);
  write_text(out, doc.dump(2) + "\n");
  run.summary()["mean_ap"] = doc["mean_ap"];
}

ojson mota_row(const PartMota& p, const PartVocabulary& parts) {
  ojson row;
  row["part"] = p.part >= 0 ? parts[p.part].name : "average";
  row["misses"] = p.misses;
  row["false_positives"] = p.false_positives;
  row["id_switches"] = p.id_switches;
  row["annotations"] = p.annotations;
  row["mota"] = number(p.mota);
  return row;
}

void cmd_eval_mota(Context& ctx, Run& run, const std::string& tracks_path, const std::string& gt_path,
                   const std::string& out) {
  const auto parts = io::peek_parts(tracks_path);
  const auto tracks = run.timed("load", [&] { return io::load_tracks(tracks_path, parts); });
  const auto gt = run.timed("load", [&] { return io::load_ground_truth(gt_path, parts); });
  const auto report = run.timed("evaluate", [&] { return mota(tracks, gt, parts.size(), ctx.config.evaluation); });
  ojson doc;
  doc["alpha"] = ctx.config.evaluation.alpha;
  doc["matching"] = ctx.config.evaluation.hungarian ? "hungarian" : "greedy";
  doc["average"] = mota_row(report.average, parts);
  ojson rows = ojson::array();
  for (const auto& p : report.parts) rows.push_back(mota_row(p, parts));
  doc["parts"] = std::move(rows);
  write_text(out, doc.dump(2) + "\n");
  run.summary()["mota"] = doc["average"]["mota"];
}

void cmd_overlay(Run& run, const std::string& tracks_path, const std::string& out) {
  const auto parts = io::peek_parts(tracks_path);
  const auto tracks = run.timed("load", [&] { return io::load_tracks(tracks_path, parts); });
  write_to(out, [&](std::ostream& o) { io::write_overlay(o, tracks, parts); });
  run.summary()["persons"] = tracks.persons.size();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return kParse;
  if (dynamic_cast<const InfeasibleError*>(&e)) return kInfeasible;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SizeError*>(&e)) return kUsage;
  if (dynamic_cast<const StructuralError*>(&e) || dynamic_cast<const DomainError*>(&e)) return kParse;
  return kInternal;
}

void emit_summary(const Globals& g, const ojson& summary, bool failed) {
  const auto text = summary.dump() + "\n";
  if (g.summary == "-") {
    // Failures keep stderr to the one diagnostic line.
    if (!failed) std::cerr << text;
    return;
  }
  try {
    io::save_text(g.summary, text);
  } catch (const std::exception& e) {
    std::cerr << "arttrack: warning: " << e.what() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-person articulated tracking by subgraph multicut", "arttrack"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);

  Context ctx;
  auto& g = ctx.g;
  app.add_option("--model", g.model, "Graph model")->check(CLI::IsMember({"bu-full", "bu-sparse", "tdbu"}));
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_option("--seed", g.seed, "Seed for the solver and the synthetic generator");
  app.add_option("--features", g.features, "Temporal features, a subset of l2,sift,dm");
  app.add_flag("--paper-sign", g.paper_sign, "Use the literal log-ratio orientation of the costs");
  app.add_flag("--hungarian", g.hungarian, "Optimal instead of greedy matching in eval-mota");
  app.add_option("--summary", g.summary, "Run summary destination ('-' for stderr)");

  std::string out, models_path, graph_path, tracks_path, gt_path, heads_out;
  std::vector<std::string> scenes;
  bool exact = false;
  SceneArgs scene;

  auto* synth = app.add_subcommand("synth-generate", "Write a synthetic scene with ground truth");
  synth->add_option("--out-dir", out, "Output directory")->required();
  synth->add_option("--persons", ctx.config.synth.persons);
  synth->add_option("--frames", ctx.config.synth.frames);
  synth->add_option("--sigma", ctx.config.synth.sigma, "Detection noise in pixels");
  synth->add_option("--miss-rate", ctx.config.synth.miss_rate);
  synth->add_option("--clutter-rate", ctx.config.synth.clutter_rate);

  auto* train = app.add_subcommand("train-pairwise", "Fit pairwise cost models on annotated scenes");
  train->add_option("--scenes", scenes, "Scene directories");
  scene.add(train, true);
  train->add_option("--out", out, "Models file ('-' for stdout)")->required();

  auto* build = app.add_subcommand("build-graph", "Build the problem graph of a scene");
  scene.add(build, false);
  build->add_option("--models", models_path, "Models file")->required();
  build->add_option("--out", out, "Graph file ('-' for stdout)")->required();

  auto* solve = app.add_subcommand("solve", "Solve a problem graph");
  solve->add_option("--graph", graph_path, "Graph file")->required();
  solve->add_flag("--exact", exact, "Exact enumeration (small graphs only)");
  solve->add_option("--out", out, "Solution file ('-' for stdout)")->required();

  auto* oracle = app.add_subcommand("oracle-check", "Compare local search with the exact solver");
  oracle->add_option("--graph", graph_path, "Graph file")->required();
  oracle->add_option("--out", out, "Report file (default stdout)");

  auto* trk = app.add_subcommand("track", "Track all persons of a scene");
  scene.add(trk, false);
  trk->add_option("--models", models_path, "Models file")->required();
  trk->add_option("--out", out, "Tracks file ('-' for stdout)")->required();
  trk->add_option("--heads-out", heads_out, "Also write the head tracks");

  auto* ap = app.add_subcommand("eval-ap", "Per-part average precision");
  auto* mt = app.add_subcommand("eval-mota", "Per-part MOTA");
  for (auto* cmd : {ap, mt}) {
    cmd->add_option("--tracks", tracks_path, "Tracks file")->required();
    cmd->add_option("--gt", gt_path, "Ground-truth file")->required();
    cmd->add_option("--out", out, "Report file (default stdout)");
  }

  auto* overlay = app.add_subcommand("export-overlay", "Pose geometry records for plotting");
  overlay->add_option("--tracks", tracks_path, "Tracks file")->required();
  overlay->add_option("--out", out, "Overlay file ('-' for stdout)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const auto* cmd = app.get_subcommands().front();
  Run run(cmd->get_name());
  const auto start = Clock::now();
  int code = kOk;
  try {
    // Command-line synth values take precedence over the config file.
    const SynthConfig cli_synth = ctx.config.synth;
    ctx.load_config();
    for (const char* name : {"--persons", "--frames", "--sigma", "--miss-rate", "--clutter-rate"})
      if (synth->count(name)) {
        auto& s = ctx.config.synth;
        if (std::string(name) == "--persons") s.persons = cli_synth.persons;
        if (std::string(name) == "--frames") s.frames = cli_synth.frames;
        if (std::string(name) == "--sigma") s.sigma = cli_synth.sigma;
        if (std::string(name) == "--miss-rate") s.miss_rate = cli_synth.miss_rate;
        if (std::string(name) == "--clutter-rate") s.clutter_rate = cli_synth.clutter_rate;
      }
    ctx.config.check();

    if (cmd == synth) cmd_synth(ctx, run, out);
    else if (cmd == train) cmd_train(ctx, run, scenes, scene, out);
    else if (cmd == build) cmd_build(ctx, run, scene, models_path, out);
    else if (cmd == solve) cmd_solve(ctx, run, graph_path, exact, out);
    else if (cmd == oracle) cmd_oracle(ctx, run, graph_path, out);
    else if (cmd == trk) cmd_track(ctx, run, scene, models_path, out, heads_out);
    else if (cmd == ap) cmd_eval_ap(ctx, run, tracks_path, gt_path, out);
    else if (cmd == mt) cmd_eval_mota(ctx, run, tracks_path, gt_path, out);
    else if (cmd == overlay) cmd_overlay(run, tracks_path, out);
  } catch (const std::exception& e) {
    code = exit_code_for(e);
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "arttrack: error: " << msg << "\n";
    run.summary()["error"] = msg;
  }
  std::cout.flush();
  run.timings()["total"] =
      std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  run.summary()["exit_code"] = code;
  emit_summary(g, run.summary(), code != kOk);
  return code;
}
