#pragma once

#include <variant>
#include <vector>

#include "dronav/geom/transform.hpp"

namespace dronav::vehicle {

struct Rect {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  bool contains(geom::Vec2 p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  /// Euclidean distance from p to the rectangle (0 inside).
  double distance(geom::Vec2 p) const;
};

struct Circle {
  geom::Vec2 center;
  double radius = 0.0;

  double distance(geom::Vec2 p) const;
};

using Shape = std::variant<Rect, Circle>;

/// Signed-free distance from p to a shape: 0 when inside.
double distance_to(const Shape& s, geom::Vec2 p);

/// Static 2-D world: an axis-aligned room with obstacles inside it.
struct WorldModel {
  Rect bounds{0.0, 0.0, 10.0, 10.0};
  std::vector<Shape> obstacles;

  /// True when p lies in free space (strictly inside bounds, outside every obstacle).
  bool is_free(geom::Vec2 p) const;
};

}  // namespace dronav::vehicle
