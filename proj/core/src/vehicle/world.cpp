#include "dronav/vehicle/world.hpp"

#include <algorithm>

namespace dronav::vehicle {

double Rect::distance(geom::Vec2 p) const {
  const double dx = std::max({min_x - p.x, 0.0, p.x - max_x});
  const double dy = std::max({min_y - p.y, 0.0, p.y - max_y});
  return std::hypot(dx, dy);
}

double Circle::distance(geom::Vec2 p) const {
  return std::max(0.0, (p - center).norm() - radius);
}

double distance_to(const Shape& s, geom::Vec2 p) {
  return std::visit([&](const auto& shape) { return shape.distance(p); }, s);
}

bool WorldModel::is_free(geom::Vec2 p) const {
  if (!(p.x > bounds.min_x && p.x < bounds.max_x && p.y > bounds.min_y && p.y < bounds.max_y)) {
    return false;
  }
  return std::none_of(obstacles.begin(), obstacles.end(),
                      [&](const Shape& s) { return distance_to(s, p) == 0.0; });
}

}  // namespace dronav::vehicle
