#pragma once

#include "dronav/geom/transform.hpp"
#include "dronav/mapping/grid.hpp"
#include "dronav/sensing/lidar.hpp"

namespace dronav::mapping {

/// Integrate one scan taken from `sensor_pose` (lidar frame in map frame).
/// Within a scan every touched cell is updated once: endpoint cells by
/// +l_occ, cells crossed on the way (sensor cell included, endpoint excluded)
/// by -l_free. A cell that is both an endpoint and crossed counts as a hit.
/// Beams without a return clear up to range_max. The grid grows to fit.
void integrate_scan(LogOddsGrid& grid, const geom::Pose2D& sensor_pose, const sensing::LaserScan& scan);

}  // namespace dronav::mapping
