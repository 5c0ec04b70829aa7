#include "dronav/geom/transform.hpp"

namespace dronav::geom {

Transform2D compose(const Transform2D& a, const Transform2D& b) {
  const Vec2 t = a.apply(b.translation);
  return {t.x, t.y, a.rotation + b.rotation};
}

Transform2D invert(const Transform2D& t) {
  const double c = std::cos(t.rotation), s = std::sin(t.rotation);
  // -R^T * translation
  const double x = -(c * t.translation.x + s * t.translation.y);
  const double y = -(-s * t.translation.x + c * t.translation.y);
  return {x, y, -t.rotation};
}

Pose2D compose(const Pose2D& base, const Transform2D& delta) {
  return Pose2D::from_transform(compose(base.as_transform(), delta));
}

Transform2D between(const Pose2D& from, const Pose2D& to) {
  return compose(invert(from.as_transform()), to.as_transform());
}

}  // namespace dronav::geom
