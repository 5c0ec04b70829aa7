#pragma once

#include <cstdint>
#include <optional>

#include "dronav/geom/transform.hpp"
#include "dronav/mapping/grid.hpp"
#include "dronav/mapping/matcher.hpp"
#include "dronav/sensing/lidar.hpp"

namespace dronav::mapping {

struct SlamParams {
  GridGeometry initial_geometry{0.05, 220, 220, {-0.525, -0.525}};
  LogOddsParams log_odds;
  SearchWindow window;
  double min_score = 0.3;
  double match_translation = 0.05;   // m moved since the last match before matching again
  double match_rotation = 0.0349;    // rad (2 deg)
  int min_returns = 10;
  bool matcher_enabled = true;       // false gives odometry-only dead reckoning
  // Integrate scans taken before the pose has moved past the match
  // thresholds. Off by default: repeated scans from one spot keep adding
  // range-noise hits to the cells just behind walls.
  bool integrate_stationary = false;
  geom::Transform2D base_to_lidar;   // lidar_link pose in base_link
};

enum class SlamStatus : std::uint8_t { kInitialized, kIntegrated, kMatched, kLowScore, kSkipped, kHeld };

const char* to_string(SlamStatus s);

struct SlamState {
  SlamParams params;
  LogOddsGrid grid;
  geom::Pose2D pose;             // base_link in map
  geom::Pose2D last_match_pose;  // base_link pose at the last matcher run
  bool initialized = false;
  std::uint64_t ticks = 0;
  std::uint64_t matches = 0;
  std::uint64_t low_scores = 0;
  std::uint64_t skipped = 0;
};

/// The first tick places base_link at `initial_pose`.
SlamState make_slam_state(const SlamParams& params, const geom::Pose2D& initial_pose = {});

struct SlamTickResult {
  geom::Pose2D map_pose;
  SlamStatus status = SlamStatus::kIntegrated;
  double score = 0.0;
};

/// Advance SLAM by one scan. The map is updated only once the pose has moved
/// more than match_translation or match_rotation since the last update,
/// unless integrate_stationary is set; other scans report kHeld.
/// `base_delta` is base_link motion since the previous scan expressed in the
/// previous base_link frame; nullopt when odometry was unavailable. Scans
/// with too few returns are not integrated and report kSkipped.
SlamTickResult slam_tick(SlamState& state, const std::optional<geom::Transform2D>& base_delta,
                         const sensing::LaserScan& scan);

}  // namespace dronav::mapping
