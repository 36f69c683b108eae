#include "arttrack/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "arttrack/errors.hpp"

namespace arttrack::io {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Reading

class Reader {
 public:
  Reader(std::istream& in, std::string source, std::string_view format) : in_(in), source_(std::move(source)) {
    if (!next(header_)) fail("missing header record");
    if (!header_.is_object() || !header_.contains("format") || header_["format"] != format)
      fail("expected header with format \"" + std::string(format) + "\"");
    if (!header_.contains("version") || !header_["version"].is_number_integer())
      fail("header lacks an integer version");
    if (header_["version"].get<int>() != kFormatVersion)
      fail("unsupported version " + header_["version"].dump());
    header_line_ = line_;
  }

  const json& header() const { return header_; }
  int line() const { return line_; }
  const std::string& source() const { return source_; }

  bool next(json& record) {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        record = json::parse(text);
      } catch (const json::parse_error& e) {
        fail(std::string("malformed JSON: ") + e.what());
      }
      if (!record.is_object()) fail("record is not an object");
      return true;
    }
    if (in_.bad()) fail("read error");
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

  void keys(const json& obj, std::initializer_list<std::string_view> allowed,
            std::initializer_list<std::string_view> required) const {
    for (const auto& [k, _] : obj.items())
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) fail("unknown field \"" + k + "\"");
    for (auto k : required)
      if (!obj.contains(std::string(k))) fail("missing field \"" + std::string(k) + "\"");
  }

  double number(const json& obj, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(std::string("field \"") + key + "\" must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(std::string("field \"") + key + "\" is not finite");
    return d;
  }

  double number(const json& v, const std::string& what) const {
    if (!v.is_number()) fail(what + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(what + " is not finite");
    return d;
  }

  std::int64_t integer(const json& obj, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(std::string("field \"") + key + "\" must be an integer");
    return v.get<std::int64_t>();
  }

  std::string string(const json& obj, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(std::string("field \"") + key + "\" must be a string");
    return v.get<std::string>();
  }

  const json& array(const json& obj, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_array()) fail(std::string("field \"") + key + "\" must be an array");
    return v;
  }

  std::vector<double> numbers(const json& arr, const std::string& what, std::size_t expected = 0) const {
    if (!arr.is_array()) fail(what + " must be an array");
    if (expected && arr.size() != expected) fail(what + " must have " + std::to_string(expected) + " entries");
    std::vector<double> out;
    for (const auto& v : arr) out.push_back(number(v, what + " entry"));
    return out;
  }

  PartVocabulary vocabulary() const {
    if (!header_.contains("parts") || !header_["parts"].is_array()) fail("header lacks a parts array");
    std::vector<std::string> names;
    for (const auto& p : header_["parts"]) {
      if (!p.is_string()) fail("part names must be strings");
      names.push_back(p.get<std::string>());
    }
    std::optional<std::pair<std::string, std::string>> roots;
    if (header_.contains("roots") && !header_["roots"].is_null()) {
      const auto& r = header_["roots"];
      if (!r.is_array() || r.size() != 2 || !r[0].is_string() || !r[1].is_string())
        fail("roots must be a pair of part names");
      roots = std::make_pair(r[0].get<std::string>(), r[1].get<std::string>());
    }
    try {
      return PartVocabulary(std::move(names), roots);
    } catch (const StructuralError& e) {
      fail(e.what());
    }
  }

  /// Checks that the header's parts list equals the vocabulary in use.
  void same_parts(const PartVocabulary& parts) const {
    if (!header_.contains("parts") || !header_["parts"].is_array()) fail("header lacks a parts array");
    const auto& h = header_["parts"];
    bool same = static_cast<int>(h.size()) == parts.size();
    for (int i = 0; same && i < parts.size(); ++i) same = h[static_cast<std::size_t>(i)] == parts[i].name;
    if (!same) fail("part vocabulary differs from the detections file");
  }

  int part(const PartVocabulary& parts, const std::string& name) const {
    const auto id = parts.find(name);
    if (!id) fail("unknown part \"" + name + "\"");
    return *id;
  }

 private:
  std::istream& in_;
  std::string source_;
  json header_;
  int line_ = 0;
  int header_line_ = 0;
};

// ---------------------------------------------------------------------------
// Writing

ojson header(std::string_view format) {
  ojson h;
  h["format"] = std::string(format);
  h["version"] = kFormatVersion;
  return h;
}

ojson part_names(const PartVocabulary& parts) {
  ojson a = ojson::array();
  for (const auto& p : parts.parts()) a.push_back(p.name);
  return a;
}

ojson root_names(const PartVocabulary& parts) {
  if (!parts.has_roots()) return nullptr;
  return ojson::array({parts[*parts.anchor_root()].name, parts[*parts.secondary_root()].name});
}

void emit(std::ostream& out, const ojson& record) { out << record.dump() << '\n'; }

ojson model_json(const LogisticModel& m) {
  ojson j;
  j["schema"] = m.schema();
  j["features"] = m.feature_names();
  j["weights"] = m.weights();
  j["offset"] = m.offset();
  j["scale"] = m.scale();
  return j;
}

LogisticModel model_from(const Reader& r, const json& j) {
  if (!j.is_object()) r.fail("model must be an object");
  r.keys(j, {"schema", "features", "weights", "offset", "scale"}, {"schema", "features", "weights"});
  std::vector<std::string> names;
  for (const auto& f : r.array(j, "features")) {
    if (!f.is_string()) r.fail("feature names must be strings");
    names.push_back(f.get<std::string>());
  }
  const auto w = r.numbers(j.at("weights"), "weights");
  const auto off = j.contains("offset") ? r.numbers(j.at("offset"), "offset") : std::vector<double>{};
  const auto sc = j.contains("scale") ? r.numbers(j.at("scale"), "scale") : std::vector<double>{};
  try {
    return LogisticModel(r.string(j, "schema"), std::move(names), w, off, sc);
  } catch (const StructuralError& e) {
    r.fail(e.what());
  }
}

std::map<std::int64_t, const Detection*> index_detections(const Sequence& seq) {
  std::map<std::int64_t, const Detection*> out;
  for (const auto& f : seq.frames)
    for (const auto& d : f) out[d.node_id] = &d;
  return out;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------

Sequence read_detections(std::istream& in, const std::string& source) {
  Reader r(in, source, "arttrack.detections");
  r.keys(r.header(), {"format", "version", "parts", "roots", "frames"}, {"parts"});
  Sequence seq;
  seq.parts = r.vocabulary();
  std::optional<int> declared;
  if (r.header().contains("frames")) {
    const auto n = r.integer(r.header(), "frames");
    if (n < 0) r.fail("frames must be non-negative");
    declared = static_cast<int>(n);
    seq.frames.resize(static_cast<std::size_t>(n));
  }
  json rec;
  std::int64_t next_id = 0;
  while (r.next(rec)) {
    r.keys(rec, {"frame", "part", "x", "y", "score"}, {"frame", "part", "x", "y", "score"});
    Detection d;
    d.node_id = next_id++;
    const auto frame = r.integer(rec, "frame");
    if (frame < 0) r.fail("frame must be non-negative");
    if (declared && frame >= *declared) r.fail("frame beyond the declared frame count");
    if (frame > 1000000) r.fail("frame index too large");
    d.frame = static_cast<int>(frame);
    d.part = r.part(seq.parts, r.string(rec, "part"));
    d.pos = {r.number(rec, "x"), r.number(rec, "y")};
    d.score = r.number(rec, "score");
    if (!(d.score > 0.0 && d.score < 1.0)) r.fail("score must lie strictly between 0 and 1");
    if (seq.frames.size() <= static_cast<std::size_t>(d.frame)) seq.frames.resize(static_cast<std::size_t>(d.frame) + 1);
    seq.frames[static_cast<std::size_t>(d.frame)].push_back(d);
  }
  return seq;
}

void write_detections(std::ostream& out, const Sequence& seq) {
  auto h = header("arttrack.detections");
  h["parts"] = part_names(seq.parts);
  h["roots"] = root_names(seq.parts);
  h["frames"] = seq.frame_count();
  emit(out, h);
  std::int64_t expected = 0;
  for (const auto& frame : seq.frames)
    for (const auto& d : frame) {
      if (d.node_id != expected++)
        throw StructuralError("detections must carry node ids 0..n-1 in frame order to be written");
      ojson rec;
      rec["frame"] = d.frame;
      rec["part"] = seq.parts[d.part].name;
      rec["x"] = d.pos.x;
      rec["y"] = d.pos.y;
      rec["score"] = d.score;
      emit(out, rec);
    }
}

void read_descriptors(std::istream& in, const std::string& source, Sequence& seq) {
  Reader r(in, source, "arttrack.descriptors");
  r.keys(r.header(), {"format", "version", "dim"}, {});
  const auto index = index_detections(seq);
  std::optional<std::size_t> dim;
  if (r.header().contains("dim")) dim = static_cast<std::size_t>(r.integer(r.header(), "dim"));
  json rec;
  while (r.next(rec)) {
    r.keys(rec, {"node", "vectors"}, {"node", "vectors"});
    DescriptorSet ds;
    ds.node_id = r.integer(rec, "node");
    if (!index.count(ds.node_id)) r.fail("descriptor for unknown node " + std::to_string(ds.node_id));
    if (seq.descriptors.count(ds.node_id)) r.fail("second descriptor record for node " + std::to_string(ds.node_id));
    for (const auto& v : r.array(rec, "vectors")) {
      ds.vectors.push_back(r.numbers(v, "descriptor"));
      if (!dim) dim = ds.vectors.back().size();
      if (ds.vectors.back().size() != *dim || *dim == 0) r.fail("descriptor length differs from " + std::to_string(*dim));
    }
    if (ds.vectors.empty()) r.fail("descriptor record without vectors");
    seq.descriptors[ds.node_id] = std::move(ds);
  }
}

void write_descriptors(std::ostream& out, const Sequence& seq) {
  auto h = header("arttrack.descriptors");
  if (!seq.descriptors.empty() && !seq.descriptors.begin()->second.vectors.empty())
    h["dim"] = seq.descriptors.begin()->second.vectors.front().size();
  emit(out, h);
  for (const auto& [id, ds] : seq.descriptors) {
    ojson rec;
    rec["node"] = id;
    rec["vectors"] = ds.vectors;
    emit(out, rec);
  }
}

void read_correspondences(std::istream& in, const std::string& source, Sequence& seq) {
  Reader r(in, source, "arttrack.correspondences");
  r.keys(r.header(), {"format", "version"}, {});
  json rec;
  while (r.next(rec)) {
    r.keys(rec, {"frame", "direction", "pairs"}, {"frame", "direction", "pairs"});
    CorrespondenceSet c;
    const auto frame = r.integer(rec, "frame");
    if (frame < 0 || frame + 1 >= seq.frame_count()) r.fail("frame pair outside the sequence");
    c.frame = static_cast<int>(frame);
    try {
      c.direction = flow_direction_from_string(r.string(rec, "direction"));
    } catch (const StructuralError& e) {
      r.fail(e.what());
    }
    if (seq.correspondences_for(c.frame, c.direction)) r.fail("second correspondence set for this frame pair");
    for (const auto& p : r.array(rec, "pairs")) {
      const auto v = r.numbers(p, "correspondence", 4);
      c.pairs.push_back({{v[0], v[1]}, {v[2], v[3]}});
    }
    seq.correspondences.push_back(std::move(c));
  }
}

void write_correspondences(std::ostream& out, const Sequence& seq) {
  emit(out, header("arttrack.correspondences"));
  for (const auto& c : seq.correspondences) {
    ojson rec;
    rec["frame"] = c.frame;
    rec["direction"] = std::string(to_string(c.direction));
    ojson pairs = ojson::array();
    for (const auto& p : c.pairs) pairs.push_back({p.first.x, p.first.y, p.second.x, p.second.y});
    rec["pairs"] = std::move(pairs);
    emit(out, rec);
  }
}

void read_attachments(std::istream& in, const std::string& source, Sequence& seq) {
  Reader r(in, source, "arttrack.attachments");
  r.keys(r.header(), {"format", "version"}, {});
  const auto index = index_detections(seq);
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  json rec;
  while (r.next(rec)) {
    r.keys(rec, {"root", "proposal", "p"}, {"root", "proposal", "p"});
    ConditionalAttachment a{r.integer(rec, "root"), r.integer(rec, "proposal"), r.number(rec, "p")};
    for (auto id : {a.root, a.proposal})
      if (!index.count(id)) r.fail("attachment references unknown node " + std::to_string(id));
    if (!(a.p > 0.0 && a.p < 1.0)) r.fail("probability must lie strictly between 0 and 1");
    if (!seen.emplace(a.root, a.proposal).second) r.fail("duplicate attachment");
    seq.attachments.push_back(a);
  }
}

void write_attachments(std::ostream& out, const Sequence& seq) {
  emit(out, header("arttrack.attachments"));
  for (const auto& a : seq.attachments) {
    ojson rec;
    rec["root"] = a.root;
    rec["proposal"] = a.proposal;
    rec["p"] = a.p;
    emit(out, rec);
  }
}

// ---------------------------------------------------------------------------

GroundTruth read_ground_truth(std::istream& in, const std::string& source, const PartVocabulary& parts) {
  Reader r(in, source, "arttrack.groundtruth");
  r.keys(r.header(), {"format", "version", "parts", "frames"}, {"parts", "frames"});
  r.same_parts(parts);
  GroundTruth gt;
  const auto frames = r.integer(r.header(), "frames");
  if (frames < 0 || frames > 1000000) r.fail("bad frame count");
  gt.frames.resize(static_cast<std::size_t>(frames));
  json rec;
  while (r.next(rec)) {
    const auto type = rec.contains("type") ? r.string(rec, "type") : "";
    const auto frame = rec.contains("frame") ? r.integer(rec, "frame") : -1;
    if (frame < 0 || frame >= frames) r.fail("frame outside the annotated range");
    if (type == "person") {
      r.keys(rec, {"type", "frame", "person", "head_size", "joints"}, {"frame", "person", "head_size", "joints"});
      GtPerson p;
      p.id = static_cast<int>(r.integer(rec, "person"));
      p.head_size = r.number(rec, "head_size");
      if (!(p.head_size > 0)) r.fail("head_size must be positive");
      const auto& joints = rec.at("joints");
      if (!joints.is_object()) r.fail("joints must be an object");
      for (const auto& [name, xy] : joints.items()) {
        const auto v = r.numbers(xy, "joint", 2);
        p.joints[r.part(parts, name)] = {{v[0], v[1]}, 1.0, -1};
      }
      auto& people = gt.frames[static_cast<std::size_t>(frame)];
      for (const auto& q : people)
        if (q.id == p.id) r.fail("person id repeats within the frame");
      people.push_back(std::move(p));
    } else if (type == "ignore") {
      r.keys(rec, {"type", "frame", "rect"}, {"frame", "rect"});
      const auto v = r.numbers(rec.at("rect"), "rect", 4);
      if (v[0] > v[2] || v[1] > v[3]) r.fail("rect corners must be ordered min, max");
      gt.ignore.push_back({static_cast<int>(frame), {v[0], v[1]}, {v[2], v[3]}});
    } else {
      r.fail("record type must be \"person\" or \"ignore\"");
    }
  }
  return gt;
}

void write_ground_truth(std::ostream& out, const GroundTruth& gt, const PartVocabulary& parts) {
  auto h = header("arttrack.groundtruth");
  h["parts"] = part_names(parts);
  h["frames"] = gt.frame_count();
  emit(out, h);
  for (std::size_t t = 0; t < gt.frames.size(); ++t)
    for (const auto& p : gt.frames[t]) {
      ojson rec;
      rec["type"] = "person";
      rec["frame"] = t;
      rec["person"] = p.id;
      rec["head_size"] = p.head_size;
      ojson joints = ojson::object();
      for (const auto& [part, j] : p.joints) joints[parts[part].name] = {j.pos.x, j.pos.y};
      rec["joints"] = std::move(joints);
      emit(out, rec);
    }
  for (const auto& ig : gt.ignore) {
    ojson rec;
    rec["type"] = "ignore";
    rec["frame"] = ig.frame;
    rec["rect"] = {ig.min.x, ig.min.y, ig.max.x, ig.max.y};
    emit(out, rec);
  }
}

TrackSet read_tracks(std::istream& in, const std::string& source, const PartVocabulary& parts) {
  Reader r(in, source, "arttrack.tracks");
  r.keys(r.header(), {"format", "version", "parts"}, {"parts"});
  r.same_parts(parts);
  TrackSet tracks;
  json rec;
  while (r.next(rec)) {
    r.keys(rec, {"frame", "person", "joints"}, {"frame", "person", "joints"});
    const auto frame = r.integer(rec, "frame");
    if (frame < 0) r.fail("frame must be non-negative");
    const int person = static_cast<int>(r.integer(rec, "person"));
    if (tracks.find(person, static_cast<int>(frame))) r.fail("person appears twice in one frame");
    const auto& joints = rec.at("joints");
    if (!joints.is_object()) r.fail("joints must be an object");
    auto& pose = tracks.persons[person][static_cast<int>(frame)];
    for (const auto& [name, j] : joints.items()) {
      if (!j.is_object()) r.fail("joint must be an object");
      r.keys(j, {"x", "y", "score", "node"}, {"x", "y", "score"});
      Joint joint{{r.number(j, "x"), r.number(j, "y")}, r.number(j, "score"), -1};
      if (j.contains("node")) joint.node = r.integer(j, "node");
      pose[r.part(parts, name)] = joint;
    }
  }
  return tracks;
}

void write_tracks(std::ostream& out, const TrackSet& tracks, const PartVocabulary& parts) {
  auto h = header("arttrack.tracks");
  h["parts"] = part_names(parts);
  emit(out, h);
  std::map<int, std::vector<std::pair<int, const Pose*>>> by_frame;
  for (const auto& [id, frames] : tracks.persons)
    for (const auto& [t, pose] : frames) by_frame[t].emplace_back(id, &pose);
  for (const auto& [t, people] : by_frame)
    for (const auto& [id, pose] : people) {
      ojson rec;
      rec["frame"] = t;
      rec["person"] = id;
      ojson joints = ojson::object();
      for (const auto& [part, j] : *pose) {
        ojson o;
        o["x"] = j.pos.x;
        o["y"] = j.pos.y;
        o["score"] = j.score;
        if (j.node >= 0) o["node"] = j.node;
        joints[parts[part].name] = std::move(o);
      }
      rec["joints"] = std::move(joints);
      emit(out, rec);
    }
}

// ---------------------------------------------------------------------------

ProblemGraph read_graph(std::istream& in, const std::string& source) {
  Reader r(in, source, "arttrack.graph");
  r.keys(r.header(), {"format", "version", "parts", "roots"}, {"parts"});
  const auto parts = r.vocabulary();
  std::vector<Detection> dets;
  std::vector<double> costs;
  std::vector<Edge> edges;
  std::vector<NodePair> ml, mc;
  std::map<std::int64_t, NodeIndex> index;
  auto node = [&](const json& rec, const char* key) {
    const auto id = r.integer(rec, key);
    const auto it = index.find(id);
    if (it == index.end()) r.fail("unknown node " + std::to_string(id));
    return it->second;
  };
  json rec;
  while (r.next(rec)) {
    const auto type = rec.contains("type") ? r.string(rec, "type") : "";
    if (type == "node") {
      r.keys(rec, {"type", "node", "frame", "part", "x", "y", "score", "cost"},
             {"node", "frame", "part", "x", "y", "score", "cost"});
      Detection d{r.integer(rec, "node"), static_cast<int>(r.integer(rec, "frame")),
                  {r.number(rec, "x"), r.number(rec, "y")}, r.number(rec, "score"),
                  r.part(parts, r.string(rec, "part"))};
      if (!edges.empty() || !ml.empty() || !mc.empty()) r.fail("node records must precede edges and constraints");
      if (d.frame < 0) r.fail("frame must be non-negative");
      if (!(d.score > 0 && d.score < 1)) r.fail("score must lie strictly between 0 and 1");
      if (!index.emplace(d.node_id, static_cast<NodeIndex>(dets.size())).second) r.fail("duplicate node id");
      dets.push_back(d);
      costs.push_back(r.number(rec, "cost"));
    } else if (type == "edge") {
      r.keys(rec, {"type", "u", "v", "kind", "cost"}, {"u", "v", "kind", "cost"});
      Edge e;
      e.u = node(rec, "u");
      e.v = node(rec, "v");
      try {
        e.kind = edge_kind_from_string(r.string(rec, "kind"));
      } catch (const StructuralError& ex) {
        r.fail(ex.what());
      }
      e.cost = r.number(rec, "cost");
      edges.push_back(e);
    } else if (type == "must_link" || type == "must_cut") {
      r.keys(rec, {"type", "u", "v"}, {"u", "v"});
      (type == "must_link" ? ml : mc).emplace_back(node(rec, "u"), node(rec, "v"));
    } else {
      r.fail("record type must be node, edge, must_link or must_cut");
    }
  }
  try {
    return ProblemGraph(parts, std::move(dets), std::move(edges), std::move(costs), std::move(ml), std::move(mc));
  } catch (const StructuralError& e) {
    r.fail(e.what());
  }
}

void write_graph(std::ostream& out, const ProblemGraph& g) {
  auto h = header("arttrack.graph");
  h["parts"] = part_names(g.parts());
  h["roots"] = root_names(g.parts());
  emit(out, h);
  for (NodeIndex i = 0; i < g.size(); ++i) {
    const auto& d = g.detection(i);
    ojson rec;
    rec["type"] = "node";
    rec["node"] = d.node_id;
    rec["frame"] = d.frame;
    rec["part"] = g.parts()[d.part].name;
    rec["x"] = d.pos.x;
    rec["y"] = d.pos.y;
    rec["score"] = d.score;
    rec["cost"] = g.node_cost(i);
    emit(out, rec);
  }
  for (const auto& e : g.edges()) {
    ojson rec;
    rec["type"] = "edge";
    rec["u"] = g.detection(e.u).node_id;
    rec["v"] = g.detection(e.v).node_id;
    rec["kind"] = std::string(to_string(e.kind));
    rec["cost"] = e.cost;
    emit(out, rec);
  }
  for (const auto* set : {&g.must_link(), &g.must_cut()})
    for (const auto& [a, b] : *set) {
      ojson rec;
      rec["type"] = set == &g.must_link() ? "must_link" : "must_cut";
      rec["u"] = g.detection(a).node_id;
      rec["v"] = g.detection(b).node_id;
      emit(out, rec);
    }
}

Solution read_solution(std::istream& in, const std::string& source, const ProblemGraph& graph) {
  Reader r(in, source, "arttrack.solution");
  r.keys(r.header(), {"format", "version", "nodes", "objective"}, {"nodes"});
  if (r.integer(r.header(), "nodes") != graph.size()) r.fail("solution size differs from the graph");
  Solution sol(static_cast<std::size_t>(graph.size()));
  std::vector<bool> seen(static_cast<std::size_t>(graph.size()), false);
  json rec;
  while (r.next(rec)) {
    r.keys(rec, {"node", "cluster"}, {"node", "cluster"});
    const auto idx = graph.index_of(r.integer(rec, "node"));
    if (!idx) r.fail("unknown node");
    if (seen[static_cast<std::size_t>(*idx)]) r.fail("node listed twice");
    seen[static_cast<std::size_t>(*idx)] = true;
    const auto c = r.integer(rec, "cluster");
    if (c < -1 || c > 1000000000) r.fail("cluster must be -1 or a non-negative id");
    sol.assign(*idx, static_cast<int>(c));
  }
  return sol;
}

void write_solution(std::ostream& out, const ProblemGraph& graph, const Solution& sol) {
  auto h = header("arttrack.solution");
  h["nodes"] = graph.size();
  h["objective"] = objective(graph, sol);
  emit(out, h);
  const auto canon = sol.canonical();
  for (NodeIndex i = 0; i < graph.size(); ++i) {
    ojson rec;
    rec["node"] = graph.detection(i).node_id;
    rec["cluster"] = canon.cluster_of(i);
    emit(out, rec);
  }
}

// ---------------------------------------------------------------------------

CostModels read_models(std::istream& in, const std::string& source, const PartVocabulary& parts) {
  Reader r(in, source, "arttrack.models");
  r.keys(r.header(), {"format", "version", "parts"}, {"parts"});
  r.same_parts(parts);
  CostModels models;
  bool same_seen = false;
  json rec;
  while (r.next(rec)) {
    const auto type = rec.contains("type") ? r.string(rec, "type") : "";
    if (type == "cross_type") {
      r.keys(rec, {"type", "parts", "offset", "model"}, {"parts", "offset", "model"});
      const auto& pn = r.array(rec, "parts");
      if (pn.size() != 2 || !pn[0].is_string() || !pn[1].is_string()) r.fail("parts must name two part types");
      CrossTypeModel m;
      m.part_a = r.part(parts, pn[0].get<std::string>());
      m.part_b = r.part(parts, pn[1].get<std::string>());
      if (m.part_a >= m.part_b) r.fail("cross-type parts must be listed in vocabulary order");
      const auto off = r.numbers(rec.at("offset"), "offset", 2);
      m.offset = {off[0], off[1]};
      m.logistic = model_from(r, rec.at("model"));
      if (m.logistic.schema() != kCrossTypeSchema) r.fail("cross-type model has schema " + m.logistic.schema());
      if (models.find_cross(m.part_a, m.part_b)) r.fail("duplicate cross-type model");
      models.cross_type.push_back(std::move(m));
      models.normalize();
    } else if (type == "same_type") {
      r.keys(rec, {"type", "model"}, {"model"});
      if (same_seen) r.fail("duplicate same-type model");
      same_seen = true;
      models.same_type = model_from(r, rec.at("model"));
      if (models.same_type.schema() != kSameTypeSchema) r.fail("same-type model has schema " + models.same_type.schema());
    } else if (type == "temporal") {
      r.keys(rec, {"type", "features", "imputation", "model"}, {"features", "imputation", "model"});
      if (models.temporal) r.fail("duplicate temporal model");
      TemporalModel tm;
      try {
        tm.features = FeatureSet::parse(r.string(rec, "features"));
      } catch (const ConfigError& e) {
        r.fail(e.what());
      }
      const auto& imp = rec.at("imputation");
      if (!imp.is_object()) r.fail("imputation must be an object");
      r.keys(imp, {"sift", "dm", "dm_rev"}, {"sift", "dm", "dm_rev"});
      tm.imputation = {r.number(imp, "sift"), r.number(imp, "dm"), r.number(imp, "dm_rev")};
      tm.logistic = model_from(r, rec.at("model"));
      if (tm.logistic.schema() != std::string(kTemporalSchema) + ":" + tm.features.to_string())
        r.fail("temporal model schema does not match its feature set");
      models.temporal = std::move(tm);
    } else {
      r.fail("record type must be cross_type, same_type or temporal");
    }
  }
  return models;
}

void write_models(std::ostream& out, const CostModels& models, const PartVocabulary& parts) {
  auto h = header("arttrack.models");
  h["parts"] = part_names(parts);
  emit(out, h);
  {
    ojson rec;
    rec["type"] = "same_type";
    rec["model"] = model_json(models.same_type);
    emit(out, rec);
  }
  if (models.temporal) {
    ojson rec;
    rec["type"] = "temporal";
    rec["features"] = models.temporal->features.to_string();
    ojson imp;
    imp["sift"] = models.temporal->imputation.sift;
    imp["dm"] = models.temporal->imputation.dm;
    imp["dm_rev"] = models.temporal->imputation.dm_rev;
    rec["imputation"] = std::move(imp);
    rec["model"] = model_json(models.temporal->logistic);
    emit(out, rec);
  }
  for (const auto& m : models.cross_type) {
    ojson rec;
    rec["type"] = "cross_type";
    rec["parts"] = {parts[m.part_a].name, parts[m.part_b].name};
    rec["offset"] = {m.offset.x, m.offset.y};
    rec["model"] = model_json(m.logistic);
    emit(out, rec);
  }
}

void write_overlay(std::ostream& out, const TrackSet& tracks, const PartVocabulary& parts) {
  std::vector<std::pair<int, int>> bones;
  try {
    bones = SparsityPattern::kinematic_tree(parts).expand(parts);
  } catch (const ConfigError&) {
    // Vocabularies without the standard joints get no bones.
  }
  auto h = header("arttrack.overlay");
  h["parts"] = part_names(parts);
  ojson bone_names = ojson::array();
  for (const auto& [a, b] : bones) bone_names.push_back({parts[a].name, parts[b].name});
  h["bones"] = std::move(bone_names);
  emit(out, h);
  std::map<int, std::vector<std::pair<int, const Pose*>>> by_frame;
  for (const auto& [id, frames] : tracks.persons)
    for (const auto& [t, pose] : frames) by_frame[t].emplace_back(id, &pose);
  for (const auto& [t, people] : by_frame)
    for (const auto& [id, pose] : people) {
      ojson rec;
      rec["frame"] = t;
      rec["person"] = id;
      ojson joints = ojson::object();
      for (const auto& [part, j] : *pose) joints[parts[part].name] = {j.pos.x, j.pos.y};
      rec["joints"] = std::move(joints);
      ojson segs = ojson::array();
      for (const auto& [a, b] : bones) {
        const auto ja = pose->find(a), jb = pose->find(b);
        if (ja != pose->end() && jb != pose->end())
          segs.push_back({ja->second.pos.x, ja->second.pos.y, jb->second.pos.x, jb->second.pos.y});
      }
      rec["bones"] = std::move(segs);
      emit(out, rec);
    }
}

// ---------------------------------------------------------------------------

Sequence load_sequence(const std::string& detections, const std::string& descriptors,
                       const std::string& correspondences, const std::string& attachments) {
  auto in = open(detections);
  Sequence seq = read_detections(in, detections);
  if (!descriptors.empty()) {
    auto f = open(descriptors);
    read_descriptors(f, descriptors, seq);
  }
  if (!correspondences.empty()) {
    auto f = open(correspondences);
    read_correspondences(f, correspondences, seq);
  }
  if (!attachments.empty()) {
    auto f = open(attachments);
    read_attachments(f, attachments, seq);
  }
  return seq;
}

GroundTruth load_ground_truth(const std::string& path, const PartVocabulary& parts) {
  auto in = open(path);
  return read_ground_truth(in, path, parts);
}

TrackSet load_tracks(const std::string& path, const PartVocabulary& parts) {
  auto in = open(path);
  return read_tracks(in, path, parts);
}

ProblemGraph load_graph(const std::string& path) {
  auto in = open(path);
  return read_graph(in, path);
}

CostModels load_models(const std::string& path, const PartVocabulary& parts) {
  auto in = open(path);
  return read_models(in, path, parts);
}

PartVocabulary peek_parts(const std::string& path) {
  auto in = open(path);
  std::string line;
  while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {
  }
  json h;
  try {
    h = json::parse(line);
  } catch (const json::parse_error&) {
    throw ParseError(path, 1, "malformed header");
  }
  if (!h.is_object() || !h.contains("format") || !h["format"].is_string())
    throw ParseError(path, 1, "missing header record");
  std::istringstream again(line);
  Reader r(again, path, h["format"].get<std::string>());
  return r.vocabulary();
}

void save_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out.flush()) throw Error("cannot write " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot replace " + path);
  }
}

}  // namespace arttrack::io
