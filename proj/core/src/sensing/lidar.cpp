#include "dronav/sensing/lidar.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dronav::sensing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Entry distance of a ray into an axis-aligned box (slab method).
double hit_rect(const vehicle::Rect& r, geom::Vec2 o, geom::Vec2 d) {
  double t0 = 0.0, t1 = kInf;
  const double lo[2] = {r.min_x, r.min_y}, hi[2] = {r.max_x, r.max_y};
  const double po[2] = {o.x, o.y}, pd[2] = {d.x, d.y};
  for (int k = 0; k < 2; ++k) {
    if (pd[k] == 0.0) {
      if (po[k] < lo[k] || po[k] > hi[k]) return kInf;
      continue;
    }
    double a = (lo[k] - po[k]) / pd[k], b = (hi[k] - po[k]) / pd[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return kInf;
  }
  return t0;
}

double hit_circle(const vehicle::Circle& c, geom::Vec2 o, geom::Vec2 d) {
  const geom::Vec2 m = o - c.center;
  const double b = m.dot(d);
  const double cc = m.dot(m) - c.radius * c.radius;
  if (cc <= 0.0) return 0.0;  // origin inside
  const double disc = b * b - cc;
  if (disc < 0.0) return kInf;
  const double t = -b - std::sqrt(disc);
  return t >= 0.0 ? t : kInf;
}

// Exit distance from inside the room.
double hit_bounds(const vehicle::Rect& r, geom::Vec2 o, geom::Vec2 d) {
  double t = kInf;
  if (d.x > 0) t = std::min(t, (r.max_x - o.x) / d.x);
  if (d.x < 0) t = std::min(t, (r.min_x - o.x) / d.x);
  if (d.y > 0) t = std::min(t, (r.max_y - o.y) / d.y);
  if (d.y < 0) t = std::min(t, (r.min_y - o.y) / d.y);
  return t;
}

}  // namespace

std::vector<std::string> LidarSpec::validate() const {
  std::vector<std::string> errs;
  if (!(angle_max > angle_min)) errs.emplace_back("angle_max: must exceed angle_min");
  if (num_beams < 2) errs.emplace_back("num_beams: must be >= 2");
  if (!(range_min >= 0.0)) errs.emplace_back("range_min: must be >= 0");
  if (!(range_max > range_min)) errs.emplace_back("range_max: must exceed range_min");
  if (!(noise_sigma >= 0.0)) errs.emplace_back("noise_sigma: must be >= 0");
  if (!(rate > 0.0)) errs.emplace_back("rate: must be > 0");
  return errs;
}

int LaserScan::finite_count() const {
  return static_cast<int>(std::count_if(ranges.begin(), ranges.end(), is_return));
}

std::vector<geom::Vec2> LaserScan::points() const {
  std::vector<geom::Vec2> pts;
  pts.reserve(ranges.size());
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    if (!is_return(ranges[i])) continue;
    const double a = spec.beam_angle(static_cast<int>(i));
    pts.push_back({ranges[i] * std::cos(a), ranges[i] * std::sin(a)});
  }
  return pts;
}

double cast_ray(const vehicle::WorldModel& world, geom::Vec2 origin, double angle) {
  const geom::Vec2 d{std::cos(angle), std::sin(angle)};
  double best = hit_bounds(world.bounds, origin, d);
  for (const auto& shape : world.obstacles) {
    const double t = std::visit(
        [&](const auto& s) {
          if constexpr (std::is_same_v<std::decay_t<decltype(s)>, vehicle::Rect>) {
            return hit_rect(s, origin, d);
          } else {
            return hit_circle(s, origin, d);
          }
        },
        shape);
    best = std::min(best, t);
  }
  return best;
}

LaserScan raycast_scan(const vehicle::WorldModel& world, const geom::Pose2D& sensor_pose,
                       const LidarSpec& spec, std::uint64_t rng_seed, double stamp) {
  const auto& b = world.bounds;
  if (!(sensor_pose.x > b.min_x && sensor_pose.x < b.max_x && sensor_pose.y > b.min_y &&
        sensor_pose.y < b.max_y)) {
    throw OutOfBoundsError("sensor pose outside world bounds");
  }
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  LaserScan scan;
  scan.stamp = stamp;
  scan.spec = spec;
  scan.ranges.resize(spec.num_beams);
  const geom::Vec2 origin = sensor_pose.position();
  for (int i = 0; i < spec.num_beams; ++i) {
    const double n = noise(rng) * spec.noise_sigma;
    const double t = cast_ray(world, origin, sensor_pose.theta + spec.beam_angle(i));
    scan.ranges[i] =
        t > spec.range_max ? kNoReturn : std::clamp(t + n, spec.range_min, spec.range_max);
  }
  return scan;
}

}  // namespace dronav::sensing
