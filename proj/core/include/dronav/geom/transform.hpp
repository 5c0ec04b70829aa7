#pragma once

#include <cmath>
#include <numbers>

namespace dronav::geom {

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

/// Shortest signed difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) { return normalize_angle(a - b); }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double norm() const { return std::hypot(x, y); }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

/// Planar rigid transform. Acts on points as rotate-then-translate:
/// p' = R(rotation) * p + translation.
struct Transform2D {
  Vec2 translation;
  double rotation = 0.0;

  Transform2D() = default;
  Transform2D(double x, double y, double theta)
      : translation{x, y}, rotation(normalize_angle(theta)) {}

  static Transform2D identity() { return {}; }

  Vec2 apply(Vec2 p) const {
    const double c = std::cos(rotation), s = std::sin(rotation);
    return {c * p.x - s * p.y + translation.x, s * p.x + c * p.y + translation.y};
  }

  friend bool operator==(const Transform2D&, const Transform2D&) = default;
};

/// Planar pose (position + heading) of a frame expressed in a parent frame.
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2D() = default;
  Pose2D(double px, double py, double heading)
      : x(px), y(py), theta(normalize_angle(heading)) {}

  Vec2 position() const { return {x, y}; }
  Transform2D as_transform() const { return {x, y, theta}; }
  static Pose2D from_transform(const Transform2D& t) {
    return {t.translation.x, t.translation.y, t.rotation};
  }

  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

/// Applies b first, then a (a * b in homogeneous-matrix terms).
Transform2D compose(const Transform2D& a, const Transform2D& b);

Transform2D invert(const Transform2D& t);

/// Pose composition: the pose `delta` (expressed in `base`'s frame) mapped out.
Pose2D compose(const Pose2D& base, const Transform2D& delta);

/// Relative motion taking `from` onto `to`, expressed in `from`'s frame.
Transform2D between(const Pose2D& from, const Pose2D& to);

}  // namespace dronav::geom
