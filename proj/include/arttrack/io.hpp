#pragma once

// Line-delimited JSON file formats. Every file starts with a header record
// {"format": "arttrack.<kind>", "version": 1, ...}; the field layout of each
// kind is documented in docs/FORMATS.md. Readers throw ParseError naming the
// file and the 1-based line.

#include <iosfwd>
#include <string>

#include "arttrack/core_model.hpp"
#include "arttrack/graph_builder.hpp"
#include "arttrack/sequence.hpp"

namespace arttrack::io {

inline constexpr int kFormatVersion = 1;

/// Detections: node ids are assigned in record order. The header may fix
/// the frame count; otherwise it is one past the largest frame.
Sequence read_detections(std::istream& in, const std::string& source);
/// Requires node ids 0..n-1 in frame-major order.
void write_detections(std::ostream& out, const Sequence& seq);

/// Sidecars are attached to an already parsed sequence and validated
/// against its node ids.
void read_descriptors(std::istream& in, const std::string& source, Sequence& seq);
void write_descriptors(std::ostream& out, const Sequence& seq);
void read_correspondences(std::istream& in, const std::string& source, Sequence& seq);
void write_correspondences(std::ostream& out, const Sequence& seq);
void read_attachments(std::istream& in, const std::string& source, Sequence& seq);
void write_attachments(std::ostream& out, const Sequence& seq);

GroundTruth read_ground_truth(std::istream& in, const std::string& source, const PartVocabulary& parts);
void write_ground_truth(std::ostream& out, const GroundTruth& gt, const PartVocabulary& parts);

TrackSet read_tracks(std::istream& in, const std::string& source, const PartVocabulary& parts);
void write_tracks(std::ostream& out, const TrackSet& tracks, const PartVocabulary& parts);

ProblemGraph read_graph(std::istream& in, const std::string& source);
void write_graph(std::ostream& out, const ProblemGraph& graph);

/// Node labels by node id; -1 marks unselected nodes.
Solution read_solution(std::istream& in, const std::string& source, const ProblemGraph& graph);
void write_solution(std::ostream& out, const ProblemGraph& graph, const Solution& sol);

CostModels read_models(std::istream& in, const std::string& source, const PartVocabulary& parts);
void write_models(std::ostream& out, const CostModels& models, const PartVocabulary& parts);

/// Per-frame pose geometry with bones along the kinematic tree, for
/// external plotting.
void write_overlay(std::ostream& out, const TrackSet& tracks, const PartVocabulary& parts);

// File wrappers. Open failures throw ParseError at line 0.
Sequence load_sequence(const std::string& detections, const std::string& descriptors = {},
                       const std::string& correspondences = {}, const std::string& attachments = {});
GroundTruth load_ground_truth(const std::string& path, const PartVocabulary& parts);
TrackSet load_tracks(const std::string& path, const PartVocabulary& parts);
ProblemGraph load_graph(const std::string& path);
CostModels load_models(const std::string& path, const PartVocabulary& parts);
/// Part vocabulary declared in the header of any file that carries one.
PartVocabulary peek_parts(const std::string& path);

/// Writes through a temporary file so readers never see partial output.
template <class Fn>
void save(const std::string& path, Fn&& write);
void save_text(const std::string& path, const std::string& text);

}  // namespace arttrack::io

#include <sstream>

namespace arttrack::io {

template <class Fn>
void save(const std::string& path, Fn&& write) {
  std::ostringstream buffer;
  write(buffer);
  save_text(path, buffer.str());
}

}  // namespace arttrack::io
