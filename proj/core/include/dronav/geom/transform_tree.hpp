#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dronav/error.hpp"
#include "dronav/geom/transform.hpp"

namespace dronav::geom {

namespace frames {
inline constexpr const char* kMap = "map";
inline constexpr const char* kOdom = "odom";
inline constexpr const char* kBase = "base_link";
inline constexpr const char* kLidar = "lidar_link";
}  // namespace frames

class CycleError : public Error {
  using Error::Error;
};
class MultipleParentError : public Error {
  using Error::Error;
};
class UnknownFrameError : public Error {
  using Error::Error;
};
class DisconnectedError : public Error {
  using Error::Error;
};

struct TransformEdge {
  std::string parent;
  std::string child;
  Transform2D transform;  // pose of child expressed in parent
  double stamp = 0.0;
};

/// Named frame graph. Every child has exactly one parent and the graph holds
/// no cycles; lookups return the latest stamp per edge (no interpolation).
class TransformTree {
 public:
  /// Inserts or replaces the parent->child edge.
  /// Throws CycleError or MultipleParentError and leaves the tree untouched.
  void set(const std::string& parent, const std::string& child, const Transform2D& t,
           double stamp);

  /// Pure form of set(): returns the updated copy.
  [[nodiscard]] TransformTree with(const std::string& parent, const std::string& child,
                                   const Transform2D& t, double stamp) const;

  /// Transform taking coordinates in `to_frame` into `from_frame`, i.e. the
  /// pose of `to_frame` expressed in `from_frame`.
  Transform2D lookup(const std::string& from_frame, const std::string& to_frame) const;

  bool has_frame(const std::string& frame) const;
  std::optional<TransformEdge> edge_to(const std::string& child) const;
  std::vector<TransformEdge> edges() const;

  /// Frames with no parent, sorted by name.
  std::vector<std::string> roots() const;

  /// Indented parent->child listing, one frame per line.
  std::string dump() const;

 private:
  // child -> edge
  std::map<std::string, TransformEdge> by_child_;

  Transform2D to_root(const std::string& frame, std::string& root) const;
};

}  // namespace dronav::geom
