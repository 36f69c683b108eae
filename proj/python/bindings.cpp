#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "arttrack/config.hpp"
#include "arttrack/core_model.hpp"
#include "arttrack/errors.hpp"
#include "arttrack/evaluation.hpp"
#include "arttrack/graph_builder.hpp"
#include "arttrack/io.hpp"
#include "arttrack/multicut_solver.hpp"
#include "arttrack/pipeline.hpp"
#include "arttrack/synth.hpp"
#include "arttrack/temporal_features.hpp"

namespace py = pybind11;
using namespace arttrack;

namespace {

py::dict tracks_to_dict(const TrackSet& tracks, const PartVocabulary& parts) {
  py::dict out;
  for (const auto& [id, frames] : tracks.persons) {
    py::dict per_frame;
    for (const auto& [t, pose] : frames) {
      py::dict joints;
      for (const auto& [part, j] : pose)
        joints[py::str(parts[part].name)] = py::make_tuple(j.pos.x, j.pos.y, j.score);
      per_frame[py::int_(t)] = joints;
    }
    out[py::int_(id)] = per_frame;
  }
  return out;
}

py::dict mota_row(const PartMota& p) {
  py::dict d;
  d["misses"] = p.misses;
  d["false_positives"] = p.false_positives;
  d["id_switches"] = p.id_switches;
  d["annotations"] = p.annotations;
  d["mota"] = p.mota;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Articulated multi-person tracking by minimum cost subgraph multicut";
  m.attr("__version__") = "1.0.0";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<StructuralError>(m, "StructuralError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
  py::register_exception<SizeError>(m, "SizeError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<Point>(m, "Point")
      .def(py::init<double, double>(), py::arg("x"), py::arg("y"))
      .def_readwrite("x", &Point::x)
      .def_readwrite("y", &Point::y)
      .def("__repr__", [](const Point& p) { return "Point(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")"; });

  py::class_<PartVocabulary>(m, "PartVocabulary")
      .def(py::init<std::vector<std::string>, std::optional<std::pair<std::string, std::string>>>(),
           py::arg("names"), py::arg("roots") = std::nullopt)
      .def_static("standard14", &PartVocabulary::standard14)
      .def_static("generic", &PartVocabulary::generic)
      .def("__len__", &PartVocabulary::size)
      .def_property_readonly("names",
                             [](const PartVocabulary& v) {
                               std::vector<std::string> out;
                               for (const auto& p : v.parts()) out.push_back(p.name);
                               return out;
                             })
      .def("find", &PartVocabulary::find)
      .def("is_root", &PartVocabulary::is_root);

  py::class_<Detection>(m, "Detection")
      .def(py::init([](std::int64_t id, int frame, Point pos, double score, int part) {
             return Detection{id, frame, pos, score, part};
           }),
           py::arg("node_id"), py::arg("frame"), py::arg("pos"), py::arg("score"), py::arg("part"))
      .def_readonly("node_id", &Detection::node_id)
      .def_readonly("frame", &Detection::frame)
      .def_readonly("pos", &Detection::pos)
      .def_readonly("score", &Detection::score)
      .def_readonly("part", &Detection::part);

  py::class_<ProblemGraph>(m, "ProblemGraph")
      .def_static("untyped", &ProblemGraph::untyped, py::arg("node_costs"), py::arg("edges"),
                  py::arg("must_link") = std::vector<NodePair>{}, py::arg("must_cut") = std::vector<NodePair>{})
      .def("__len__", &ProblemGraph::size)
      .def_property_readonly("node_costs", &ProblemGraph::node_costs)
      .def_property_readonly("edges",
                             [](const ProblemGraph& g) {
                               std::vector<std::tuple<NodeIndex, NodeIndex, std::string, double>> out;
                               for (const auto& e : g.edges())
                                 out.emplace_back(e.u, e.v, std::string(to_string(e.kind)), e.cost);
                               return out;
                             })
      .def_property_readonly("must_link", &ProblemGraph::must_link)
      .def_property_readonly("must_cut", &ProblemGraph::must_cut)
      .def_property_readonly("detections", &ProblemGraph::detections);

  py::class_<Solution>(m, "Solution")
      .def(py::init<std::vector<int>>(), py::arg("labels"))
      .def_property_readonly("labels", &Solution::labels)
      .def("clusters", &Solution::clusters)
      .def("canonical", &Solution::canonical)
      .def("encode", &Solution::encode)
      .def("__eq__", [](const Solution& a, const Solution& b) { return a == b; });

  py::class_<SolverParams>(m, "SolverParams")
      .def(py::init([](int max_exact_nodes, std::int64_t move_budget, std::uint64_t seed) {
             SolverParams p;
             p.max_exact_nodes = max_exact_nodes;
             p.move_budget = move_budget;
             p.seed = seed;
             p.check();
             return p;
           }),
           py::arg("max_exact_nodes") = 10, py::arg("move_budget") = 1'000'000, py::arg("seed") = 0)
      .def_readwrite("max_exact_nodes", &SolverParams::max_exact_nodes)
      .def_readwrite("move_budget", &SolverParams::move_budget)
      .def_readwrite("seed", &SolverParams::seed);

  m.def("node_cost", [](double s, bool paper_sign) {
    return node_cost(s, paper_sign ? CostConvention::Literal : CostConvention::Negated);
  }, py::arg("score"), py::arg("paper_sign") = false);
  m.def("edge_cost_from_probability", [](double p, bool paper_sign) {
    return edge_cost_from_probability(p, paper_sign ? CostConvention::Literal : CostConvention::Negated);
  }, py::arg("p"), py::arg("paper_sign") = false);
  m.def("objective", &objective);
  m.def("validate", [](const ProblemGraph& g, const Solution& s) {
    std::vector<std::tuple<std::string, std::vector<NodeIndex>, std::string>> out;
    for (const auto& v : validate(g, s)) out.emplace_back(std::string(to_string(v.kind)), v.nodes, v.message);
    return out;
  });
  m.def("solve_exact", &solve_exact, py::arg("graph"), py::arg("params") = SolverParams{});
  m.def("solve_local_search", [](const ProblemGraph& g, const SolverParams& p) { return solve_local_search(g, p); },
        py::arg("graph"), py::arg("params") = SolverParams{});

  m.def("delta_dm",
        [](const std::vector<std::array<double, 4>>& pairs, Point ci, Point cj, double side) {
          std::vector<Correspondence> corr;
          for (const auto& p : pairs) corr.push_back({{p[0], p[1]}, {p[2], p[3]}});
          RegionSpec{side}.check();
          return delta_dm(corr, Region{ci, side}, Region{cj, side});
        },
        py::arg("pairs"), py::arg("center_i"), py::arg("center_j"), py::arg("side") = 64.0);

  // Sequences and annotations stay opaque; the loaders and writers are the
  // interchange path.
  py::class_<Sequence>(m, "Sequence")
      .def_property_readonly("parts", [](const Sequence& s) { return s.parts; })
      .def_property_readonly("frame_count", &Sequence::frame_count)
      .def_property_readonly("detection_count", &Sequence::detection_count)
      .def_property_readonly("detections", [](const Sequence& s) {
        std::vector<Detection> out;
        for (const auto& f : s.frames) out.insert(out.end(), f.begin(), f.end());
        return out;
      });
  py::class_<GroundTruth>(m, "GroundTruth")
      .def_property_readonly("frame_count", &GroundTruth::frame_count)
      .def("as_tracks", &GroundTruth::as_tracks);
  py::class_<TrackSet>(m, "TrackSet")
      .def("ids", &TrackSet::ids)
      .def("joint_count", &TrackSet::joint_count)
      .def("to_dict", &tracks_to_dict, py::arg("parts"))
      .def("__eq__", [](const TrackSet& a, const TrackSet& b) { return a == b; });
  py::class_<CostModels>(m, "CostModels")
      .def_property_readonly("temporal_features", [](const CostModels& c) -> std::optional<std::string> {
        if (!c.temporal) return std::nullopt;
        return c.temporal->features.to_string();
      });

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("persons", &SynthConfig::persons)
      .def_readwrite("frames", &SynthConfig::frames)
      .def_readwrite("motion_amplitude", &SynthConfig::motion_amplitude)
      .def_readwrite("spacing", &SynthConfig::spacing)
      .def_readwrite("sigma", &SynthConfig::sigma)
      .def_readwrite("miss_rate", &SynthConfig::miss_rate)
      .def_readwrite("clutter_rate", &SynthConfig::clutter_rate)
      .def_readwrite("seed", &SynthConfig::seed);
  py::class_<SynthScene>(m, "SynthScene")
      .def_readonly("sequence", &SynthScene::sequence)
      .def_readonly("truth", &SynthScene::truth);
  m.def("synth_generate", &synth_generate);

  m.def("train_cost_models",
        [](const std::vector<std::pair<Sequence, GroundTruth>>& data, const std::string& features) {
          PairwiseTraining t;
          t.features = FeatureSet::parse(features);
          return train_cost_models(data, t);
        },
        py::arg("data"), py::arg("features") = "l2,sift,dm");

  py::class_<TrackResult>(m, "TrackResult")
      .def_readonly("tracks", &TrackResult::tracks)
      .def_readonly("head_tracks", &TrackResult::head_tracks)
      .def_readonly("objective", &TrackResult::objective)
      .def_readonly("nodes", &TrackResult::nodes)
      .def_readonly("edges", &TrackResult::edges)
      .def_property_readonly("timings_ms", [](const TrackResult& r) {
        py::dict d;
        d["seed"] = r.timings.seed_ms;
        d["build"] = r.timings.build_ms;
        d["solve"] = r.timings.solve_ms;
        d["extract"] = r.timings.extract_ms;
        return d;
      });
  m.def("track",
        [](const Sequence& seq, const CostModels& models, const std::string& model, std::uint64_t seed, int window,
           int overlap, bool paper_sign) {
          SequenceConfig cfg;
          cfg.model = model_variant_from_string(model);
          cfg.solver.seed = seed;
          cfg.window = window;
          cfg.overlap = overlap;
          if (paper_sign) cfg.build.convention = CostConvention::Literal;
          return track(seq, models, cfg);
        },
        py::arg("sequence"), py::arg("models"), py::arg("model") = "bu-sparse", py::arg("seed") = 0,
        py::arg("window") = 41, py::arg("overlap") = 10, py::arg("paper_sign") = false);

  m.def("mota",
        [](const TrackSet& tracks, const GroundTruth& gt, int part_count, double alpha, bool hungarian) {
          const auto r = mota(tracks, gt, part_count, MotaOptions{alpha, hungarian});
          py::dict out;
          out["average"] = mota_row(r.average);
          py::list parts;
          for (const auto& p : r.parts) parts.append(mota_row(p));
          out["parts"] = parts;
          return out;
        },
        py::arg("tracks"), py::arg("truth"), py::arg("part_count") = 14, py::arg("alpha") = 0.5,
        py::arg("hungarian") = false);
  m.def("average_precision",
        [](const TrackSet& tracks, const GroundTruth& gt, int part_count, double alpha) {
          const auto r = ap_per_part(predictions_from_tracks(tracks), gt, part_count, alpha);
          py::dict out;
          out["mean"] = r.mean;
          out["per_part"] = r.per_part;
          return out;
        },
        py::arg("tracks"), py::arg("truth"), py::arg("part_count") = 14, py::arg("alpha") = 0.5);

  auto io_mod = m.def_submodule("io", "Line-delimited JSON files");
  io_mod.def("load_sequence", &io::load_sequence, py::arg("detections"), py::arg("descriptors") = "",
             py::arg("correspondences") = "", py::arg("attachments") = "");
  io_mod.def("load_ground_truth", &io::load_ground_truth);
  io_mod.def("load_tracks", &io::load_tracks);
  io_mod.def("load_models", &io::load_models);
  io_mod.def("peek_parts", &io::peek_parts);
  io_mod.def("save_sequence", [](const std::string& dir, const Sequence& seq) {
    io::save(dir + "/detections.jsonl", [&](std::ostream& o) { io::write_detections(o, seq); });
    io::save(dir + "/descriptors.jsonl", [&](std::ostream& o) { io::write_descriptors(o, seq); });
    io::save(dir + "/correspondences.jsonl", [&](std::ostream& o) { io::write_correspondences(o, seq); });
    io::save(dir + "/attachments.jsonl", [&](std::ostream& o) { io::write_attachments(o, seq); });
  });
  io_mod.def("save_ground_truth", [](const std::string& path, const GroundTruth& gt, const PartVocabulary& parts) {
    io::save(path, [&](std::ostream& o) { io::write_ground_truth(o, gt, parts); });
  });
  io_mod.def("save_tracks", [](const std::string& path, const TrackSet& t, const PartVocabulary& parts) {
    io::save(path, [&](std::ostream& o) { io::write_tracks(o, t, parts); });
  });
  io_mod.def("save_models", [](const std::string& path, const CostModels& c, const PartVocabulary& parts) {
    io::save(path, [&](std::ostream& o) { io::write_models(o, c, parts); });
  });
}
