#include "dronav/geom/transform_tree.hpp"

#include <cstdio>
#include <set>

namespace dronav::geom {

void TransformTree::set(const std::string& parent, const std::string& child,
                        const Transform2D& t, double stamp) {
  if (parent == child) throw CycleError("frame '" + child + "' cannot be its own parent");
  if (auto it = by_child_.find(child); it != by_child_.end() && it->second.parent != parent) {
    throw MultipleParentError("frame '" + child + "' already has parent '" + it->second.parent +
                              "'");
  }
  // Walking up from the new parent must never reach the child.
  for (std::string f = parent;;) {
    auto it = by_child_.find(f);
    if (it == by_child_.end()) break;
    f = it->second.parent;
    if (f == child) {
      throw CycleError("edge " + parent + "->" + child + " would close a cycle");
    }
  }
  by_child_[child] = TransformEdge{parent, child, t, stamp};
}

TransformTree TransformTree::with(const std::string& parent, const std::string& child,
                                  const Transform2D& t, double stamp) const {
  TransformTree copy = *this;
  copy.set(parent, child, t, stamp);
  return copy;
}

bool TransformTree::has_frame(const std::string& frame) const {
  if (by_child_.contains(frame)) return true;
  for (const auto& [_, e] : by_child_) {
    if (e.parent == frame) return true;
  }
  return false;
}

std::optional<TransformEdge> TransformTree::edge_to(const std::string& child) const {
  auto it = by_child_.find(child);
  if (it == by_child_.end()) return std::nullopt;
  return it->second;
}

std::vector<TransformEdge> TransformTree::edges() const {
  std::vector<TransformEdge> out;
  out.reserve(by_child_.size());
  for (const auto& [_, e] : by_child_) out.push_back(e);
  return out;
}

std::vector<std::string> TransformTree::roots() const {
  std::set<std::string> r;
  for (const auto& [_, e] : by_child_) {
    if (!by_child_.contains(e.parent)) r.insert(e.parent);
  }
  return {r.begin(), r.end()};
}

Transform2D TransformTree::to_root(const std::string& frame, std::string& root) const {
  // Chain of edges from the root down to `frame`.
  std::vector<const TransformEdge*> chain;
  std::string f = frame;
  for (auto it = by_child_.find(f); it != by_child_.end(); it = by_child_.find(f)) {
    chain.push_back(&it->second);
    f = it->second.parent;
  }
  root = f;
  Transform2D acc = Transform2D::identity();
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) acc = compose(acc, (*it)->transform);
  return acc;
}

Transform2D TransformTree::lookup(const std::string& from_frame,
                                  const std::string& to_frame) const {
  for (const auto* f : {&from_frame, &to_frame}) {
    if (!has_frame(*f)) throw UnknownFrameError("unknown frame '" + *f + "'");
  }
  std::string root_from, root_to;
  const Transform2D root_T_from = to_root(from_frame, root_from);
  const Transform2D root_T_to = to_root(to_frame, root_to);
  if (root_from != root_to) {
    throw DisconnectedError("frames '" + from_frame + "' and '" + to_frame +
                            "' are not connected");
  }
  return compose(invert(root_T_from), root_T_to);
}

std::string TransformTree::dump() const {
  std::map<std::string, std::vector<const TransformEdge*>> children;
  for (const auto& [_, e] : by_child_) children[e.parent].push_back(&e);

  std::string out;
  auto visit = [&](auto&& self, const std::string& frame, int depth) -> void {
    auto it = children.find(frame);
    if (it == children.end()) return;
    for (const TransformEdge* e : it->second) {
      char line[256];
      std::snprintf(line, sizeof line, "%*s%s  [x=%.3f y=%.3f yaw=%.3f t=%.3f]\n", 2 * depth,
                    "", e->child.c_str(), e->transform.translation.x,
                    e->transform.translation.y, e->transform.rotation, e->stamp);
      out += line;
      self(self, e->child, depth + 1);
    }
  };
  for (const std::string& r : roots()) {
    out += r + "\n";
    visit(visit, r, 1);
  }
  return out;
}

}  // namespace dronav::geom
