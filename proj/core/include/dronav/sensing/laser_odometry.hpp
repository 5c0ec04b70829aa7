#pragma once

#include <array>

#include "dronav/error.hpp"
#include "dronav/geom/transform.hpp"
#include "dronav/sensing/lidar.hpp"

namespace dronav::sensing {

class DegenerateScanError : public Error {
  using Error::Error;
};

struct IcpParams {
  int max_iterations = 30;
  double convergence = 1e-4;         // on translation (m) and rotation (rad) increments
  double correspondence_cutoff = 0.5;  // m
  int min_returns = 10;
  double densify_spacing = 0.01;  // m, fill spacing between neighbouring returns
  double densify_max_gap = 0.3;   // m, neighbours farther apart are not joined
};

struct OdometryDelta {
  geom::Transform2D delta;                   // current sensor frame in the previous one
  std::array<double, 3> covariance_diag{};   // sigma_x^2, sigma_y^2, sigma_theta^2
  bool degraded = false;                     // not converged or too few correspondences
  int iterations = 0;
  int correspondences = 0;
  double rms_residual = 0.0;
};

/// Scan-to-scan point-to-point ICP seeded at `guess`. The previous scan is
/// densified along gaps between neighbouring returns. Nearest neighbours are
/// found through a bucket grid with cell size equal to the correspondence
/// cutoff. Throws DegenerateScanError when either scan has fewer than
/// `min_returns` returns.
OdometryDelta laser_odometry(const LaserScan& prev, const LaserScan& cur,
                             const geom::Transform2D& guess, const IcpParams& params = {});

/// Re-express a sensor-frame motion in the base frame, given the sensor pose
/// in the base frame.
inline geom::Transform2D sensor_delta_to_base(const geom::Transform2D& sensor_delta,
                                             const geom::Transform2D& base_to_sensor) {
  return geom::compose(geom::compose(base_to_sensor, sensor_delta), geom::invert(base_to_sensor));
}

}  // namespace dronav::sensing
