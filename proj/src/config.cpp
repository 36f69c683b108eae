#include "arttrack/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "arttrack/errors.hpp"

namespace arttrack {

namespace {

using json = nlohmann::json;

// One JSON object; every key must be consumed by a getter before done().
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!obj_.contains(key)) return;
    seen_.insert(key);
    const auto& v = obj_.at(key);
    const std::string name = path_.empty() ? key : path_ + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(name + " must be true or false");
      out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(name + " must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0)
          out = v.get<T>();
        else
          throw ConfigError(name + " must be non-negative");
      } else {
        out = v.get<T>();
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(name + " must be a number");
      out = v.get<T>();
    } else {
      if (!v.is_string()) throw ConfigError(name + " must be a string");
      out = v.get<std::string>();
    }
  }

  bool has(const char* key) const { return obj_.contains(key); }

  Section sub(const char* key) {
    seen_.insert(key);
    return Section(obj_.at(key), path_.empty() ? key : path_ + "." + key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void done() const {
    for (const auto& [k, _] : obj_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + child(k.c_str()) + "'");
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

void Config::bind(const PartVocabulary& parts) {
  if (!sparse_pairs.empty()) sequence.sparse_pattern = SparsityPattern::from_names(parts, sparse_pairs);
}

void Config::check() const {
  sequence.check();
  sequence.build.region.check();
  if (!(sequence.build.temporal_gate >= 0)) throw ConfigError("graph.temporal_gate must be non-negative");
  if (!std::isfinite(sequence.build.tdbu_unary)) throw ConfigError("graph.tdbu_unary must be finite");
  if (!(evaluation.alpha > 0)) throw ConfigError("evaluation.alpha must be positive");
  if (!(training.alpha > 0)) throw ConfigError("training.alpha must be positive");
  if (!(training.optimizer.l2 >= 0)) throw ConfigError("training.l2 must be non-negative");
  if (training.optimizer.steps < 0) throw ConfigError("training.steps must be non-negative");
  if (!(training.optimizer.learning_rate > 0)) throw ConfigError("training.learning_rate must be positive");
  if (!(training.same_type_crossover > 0)) throw ConfigError("training.same_type_crossover must be positive");
  synth.check();
}

Config parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, 0, std::string("malformed JSON: ") + e.what());
  }
  Config cfg;
  Section root(doc, "");

  if (root.has("solver")) {
    auto s = root.sub("solver");
    s.get("max_exact_nodes", cfg.sequence.solver.max_exact_nodes);
    s.get("move_budget", cfg.sequence.solver.move_budget);
    s.get("seed", cfg.sequence.solver.seed);
    s.get("seeds", cfg.sequence.seeds);
    s.done();
  }
  if (root.has("graph")) {
    auto s = root.sub("graph");
    s.get("temporal_gate", cfg.sequence.build.temporal_gate);
    s.get("region_side", cfg.sequence.build.region.side);
    s.get("tdbu_unary", cfg.sequence.build.tdbu_unary);
    s.get("temporal", cfg.sequence.build.temporal);
    if (s.has("sparse_pairs")) {
      const auto& pairs = s.raw("sparse_pairs");
      auto bad = ConfigError("graph.sparse_pairs must be a list of [part, part] name pairs");
      if (!pairs.is_array()) throw bad;
      for (const auto& p : pairs) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string()) throw bad;
        cfg.sparse_pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
      }
      if (cfg.sparse_pairs.empty()) throw ConfigError("graph.sparse_pairs must not be empty");
    }
    s.done();
  }
  if (root.has("tracking")) {
    auto s = root.sub("tracking");
    s.get("window", cfg.sequence.window);
    s.get("overlap", cfg.sequence.overlap);
    s.get("min_head_track_frames", cfg.sequence.min_head_track_frames);
    if (s.has("score_threshold")) {
      auto t = s.sub("score_threshold");
      t.get("bu-full", cfg.sequence.threshold_bu_full);
      t.get("bu-sparse", cfg.sequence.threshold_bu_sparse);
      t.get("tdbu", cfg.sequence.threshold_tdbu);
      t.done();
    }
    s.done();
  }
  if (root.has("evaluation")) {
    auto s = root.sub("evaluation");
    s.get("alpha", cfg.evaluation.alpha);
    s.get("hungarian", cfg.evaluation.hungarian);
    s.done();
  }
  if (root.has("training")) {
    auto s = root.sub("training");
    s.get("l2", cfg.training.optimizer.l2);
    s.get("steps", cfg.training.optimizer.steps);
    s.get("learning_rate", cfg.training.optimizer.learning_rate);
    s.get("alpha", cfg.training.alpha);
    s.get("same_type_crossover", cfg.training.same_type_crossover);
    std::string features;
    s.get("features", features);
    if (s.has("features")) cfg.training.features = FeatureSet::parse(features);
    s.done();
  }
  if (root.has("synth")) {
    auto s = root.sub("synth");
    auto& y = cfg.synth;
    s.get("persons", y.persons);
    s.get("frames", y.frames);
    s.get("motion_amplitude", y.motion_amplitude);
    s.get("spacing", y.spacing);
    s.get("sigma", y.sigma);
    s.get("miss_rate", y.miss_rate);
    s.get("clutter_rate", y.clutter_rate);
    s.get("seed", y.seed);
    s.get("descriptor_dim", y.descriptor_dim);
    s.get("grid_step", y.grid_step);
    if (s.has("skeleton")) {
      auto k = s.sub("skeleton");
      auto& l = y.skeleton;
      k.get("head", l.head);
      k.get("shoulder", l.shoulder);
      k.get("upper_arm", l.upper_arm);
      k.get("forearm", l.forearm);
      k.get("torso", l.torso);
      k.get("hip", l.hip);
      k.get("thigh", l.thigh);
      k.get("shin", l.shin);
      k.done();
    }
    s.done();
  }
  root.done();

  // Training shares the graph's gate and region so features match at
  // inference time.
  cfg.training.temporal_gate = cfg.sequence.build.temporal_gate;
  cfg.training.region = cfg.sequence.build.region;
  cfg.check();
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

}  // namespace arttrack
