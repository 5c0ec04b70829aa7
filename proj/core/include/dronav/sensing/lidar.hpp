#pragma once

#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "dronav/error.hpp"
#include "dronav/geom/transform.hpp"
#include "dronav/vehicle/world.hpp"

namespace dronav::sensing {

class OutOfBoundsError : public Error {
  using Error::Error;
};

struct LidarSpec {
  double angle_min = -std::numbers::pi;
  double angle_max = std::numbers::pi - 2.0 * std::numbers::pi / 360.0;
  int num_beams = 360;
  double range_min = 0.12;
  double range_max = 8.0;
  double noise_sigma = 0.01;
  double rate = 10.0;  // Hz

  double angle_increment() const { return (angle_max - angle_min) / (num_beams - 1); }
  double beam_angle(int i) const { return angle_min + i * angle_increment(); }
  std::vector<std::string> validate() const;
  friend bool operator==(const LidarSpec&, const LidarSpec&) = default;
};

/// Range value reported for beams without a return.
inline constexpr double kNoReturn = std::numeric_limits<double>::infinity();

struct LaserScan {
  double stamp = 0.0;
  std::string frame = "lidar_link";
  std::vector<double> ranges;
  LidarSpec spec;

  static bool is_return(double r) { return r != kNoReturn && r == r; }
  int finite_count() const;
  /// Beam endpoints in the sensor frame, for beams with a return.
  std::vector<geom::Vec2> points() const;
};

/// Exact ray/world intersection distance from `origin` along `angle`;
/// infinity when nothing is hit.
double cast_ray(const vehicle::WorldModel& world, geom::Vec2 origin, double angle);

/// Simulated scan from `sensor_pose` (lidar frame in world coordinates).
/// Gaussian range noise is drawn per beam from a generator seeded with
/// `rng_seed`; the same seed yields bit-identical scans.
LaserScan raycast_scan(const vehicle::WorldModel& world, const geom::Pose2D& sensor_pose,
                       const LidarSpec& spec, std::uint64_t rng_seed, double stamp = 0.0);

}  // namespace dronav::sensing
