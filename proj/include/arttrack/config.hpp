#pragma once

// Run configuration from a JSON document. Every key is optional; unknown
// keys and wrongly typed values are rejected. Layout (defaults shown in
// docs/FORMATS.md):
//
//   {"solver":     {"max_exact_nodes", "move_budget", "seed", "seeds"},
//    "graph":      {"temporal_gate", "region_side", "tdbu_unary", "temporal", "sparse_pairs"},
//    "tracking":   {"window", "overlap", "min_head_track_frames",
//                   "score_threshold": {"bu-full", "bu-sparse", "tdbu"}},
//    "evaluation": {"alpha", "hungarian"},
//    "training":   {"l2", "steps", "learning_rate", "alpha", "same_type_crossover", "features"},
//    "synth":      {"persons", "frames", "motion_amplitude", "spacing", "sigma", "miss_rate",
//                   "clutter_rate", "seed", "descriptor_dim", "grid_step", "skeleton": {...}}}

#include <string>
#include <utility>
#include <vector>

#include "arttrack/evaluation.hpp"
#include "arttrack/graph_builder.hpp"
#include "arttrack/pipeline.hpp"
#include "arttrack/synth.hpp"

namespace arttrack {

struct Config {
  SequenceConfig sequence;
  MotaOptions evaluation;
  PairwiseTraining training;
  SynthConfig synth;
  /// Cross-type pairs of the sparse model by part name; empty means the
  /// kinematic tree.
  std::vector<std::pair<std::string, std::string>> sparse_pairs;

  /// Resolves part names against the vocabulary in use.
  void bind(const PartVocabulary& parts);
  /// Range checks of every section; throws ConfigError.
  void check() const;
};

/// Throws ParseError for malformed JSON and ConfigError for unknown keys,
/// wrong types or out-of-range values.
Config parse_config(const std::string& text, const std::string& source = "config");
Config load_config(const std::string& path);

}  // namespace arttrack
