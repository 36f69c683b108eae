#include "arttrack/sequence.hpp"

#include <set>

#include "arttrack/errors.hpp"

namespace arttrack {

std::size_t Sequence::detection_count() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.size();
  return n;
}

const DescriptorSet* Sequence::descriptor(std::int64_t node_id) const {
  const auto it = descriptors.find(node_id);
  return it == descriptors.end() ? nullptr : &it->second;
}

const CorrespondenceSet* Sequence::correspondences_for(int frame, FlowDirection direction) const {
  for (const auto& c : correspondences)
    if (c.frame == frame && c.direction == direction) return &c;
  return nullptr;
}

const Detection* Sequence::find_detection(std::int64_t node_id) const {
  for (const auto& f : frames)
    for (const auto& d : f)
      if (d.node_id == node_id) return &d;
  return nullptr;
}

void Sequence::check() const {
  std::map<std::int64_t, const Detection*> by_id;
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (const auto& d : frames[t]) {
      if (d.frame != static_cast<int>(t))
        throw StructuralError("detection " + std::to_string(d.node_id) + " filed under frame " +
                              std::to_string(t) + " but has frame " + std::to_string(d.frame));
      if (d.part < 0 || d.part >= parts.size())
        throw StructuralError("detection " + std::to_string(d.node_id) + " has an unknown part type");
      if (!by_id.emplace(d.node_id, &d).second)
        throw StructuralError("duplicate node id " + std::to_string(d.node_id));
    }
  for (const auto& [id, desc] : descriptors) {
    if (id != desc.node_id) throw StructuralError("descriptor key does not match its node id");
    if (!by_id.count(id)) throw StructuralError("descriptor for unknown node " + std::to_string(id));
  }
  std::set<std::pair<int, FlowDirection>> seen;
  for (const auto& c : correspondences)
    if (!seen.emplace(c.frame, c.direction).second)
      throw StructuralError("duplicate correspondence set for frame " + std::to_string(c.frame));
  for (const auto& a : attachments) {
    const auto r = by_id.find(a.root);
    const auto p = by_id.find(a.proposal);
    if (r == by_id.end() || p == by_id.end())
      throw StructuralError("attachment references unknown node " +
                            std::to_string(r == by_id.end() ? a.root : a.proposal));
    if (r->second->frame != p->second->frame)
      throw StructuralError("attachment " + std::to_string(a.root) + " -> " + std::to_string(a.proposal) +
                            " crosses frames");
  }
}

const Pose* TrackSet::find(int person, int frame) const {
  const auto p = persons.find(person);
  if (p == persons.end()) return nullptr;
  const auto f = p->second.find(frame);
  return f == p->second.end() ? nullptr : &f->second;
}

std::vector<int> TrackSet::ids() const {
  std::vector<int> out;
  for (const auto& [id, _] : persons) out.push_back(id);
  return out;
}

std::size_t TrackSet::joint_count() const {
  std::size_t n = 0;
  for (const auto& [_, frames] : persons)
    for (const auto& [__, pose] : frames) n += pose.size();
  return n;
}

int TrackSet::frame_span() const {
  int span = 0;
  for (const auto& [_, frames] : persons)
    if (!frames.empty()) span = std::max(span, frames.rbegin()->first + 1);
  return span;
}

bool GroundTruth::ignored(int frame, Point p) const {
  for (const auto& r : ignore)
    if (r.frame == frame && r.contains(p)) return true;
  return false;
}

void GroundTruth::check() const {
  for (std::size_t t = 0; t < frames.size(); ++t) {
    std::set<int> ids;
    for (const auto& person : frames[t]) {
      if (!(person.head_size > 0))
        throw StructuralError("person " + std::to_string(person.id) + " in frame " + std::to_string(t) +
                              " has non-positive head size");
      if (!ids.insert(person.id).second)
        throw StructuralError("person id " + std::to_string(person.id) + " repeats in frame " +
                              std::to_string(t));
    }
  }
  for (const auto& r : ignore)
    if (r.min.x > r.max.x || r.min.y > r.max.y) throw StructuralError("ignore region with inverted corners");
}

TrackSet GroundTruth::as_tracks() const {
  TrackSet out;
  for (std::size_t t = 0; t < frames.size(); ++t)
    for (const auto& person : frames[t])
      for (const auto& [part, joint] : person.joints)
        out.set(person.id, static_cast<int>(t), part, {joint.pos, 1.0, joint.node});
  return out;
}

}  // namespace arttrack
