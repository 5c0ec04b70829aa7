#include "dronav/mapping/slam.hpp"

#include <cmath>

#include "dronav/mapping/scan_update.hpp"

namespace dronav::mapping {

const char* to_string(SlamStatus s) {
  switch (s) {
    case SlamStatus::kInitialized: return "initialized";
    case SlamStatus::kIntegrated: return "integrated";
    case SlamStatus::kMatched: return "matched";
    case SlamStatus::kLowScore: return "low_score";
    case SlamStatus::kSkipped: return "skipped";
    case SlamStatus::kHeld: return "held";
  }
  return "unknown";
}

SlamState make_slam_state(const SlamParams& params, const geom::Pose2D& initial_pose) {
  SlamState s;
  s.params = params;
  s.grid = LogOddsGrid(params.initial_geometry, params.log_odds);
  s.pose = initial_pose;
  s.last_match_pose = initial_pose;
  return s;
}

SlamTickResult slam_tick(SlamState& state, const std::optional<geom::Transform2D>& base_delta,
                         const sensing::LaserScan& scan) {
  ++state.ticks;
  const auto& p = state.params;
  SlamTickResult out;
  if (!state.initialized) {
    if (scan.finite_count() < p.min_returns) {
      ++state.skipped;
      out.map_pose = state.pose;
      out.status = SlamStatus::kSkipped;
      return out;
    }
    integrate_scan(state.grid, geom::compose(state.pose, p.base_to_lidar), scan);
    state.initialized = true;
    out.map_pose = state.pose;
    out.status = SlamStatus::kInitialized;
    return out;
  }

  geom::Pose2D pose = base_delta ? geom::compose(state.pose, *base_delta) : state.pose;
  if (scan.finite_count() < p.min_returns) {
    ++state.skipped;
    state.pose = pose;
    out.map_pose = pose;
    out.status = SlamStatus::kSkipped;
    return out;
  }

  out.status = SlamStatus::kIntegrated;
  const double moved = (pose.position() - state.last_match_pose.position()).norm();
  const double turned = std::abs(geom::angle_diff(pose.theta, state.last_match_pose.theta));
  const bool travelled = moved > p.match_translation || turned > p.match_rotation;
  if (!travelled && !p.integrate_stationary) {
    state.pose = pose;
    out.map_pose = pose;
    out.status = SlamStatus::kHeld;
    return out;
  }
  if (travelled) {
    if (p.matcher_enabled) {
      const geom::Transform2D lidar_to_base = geom::invert(p.base_to_lidar);
      try {
        const MatchResult m = match_scan_to_map(state.grid, scan, geom::compose(pose, p.base_to_lidar),
                                                p.window, p.min_score);
        pose = geom::compose(m.pose, lidar_to_base);
        out.score = m.score;
        out.status = SlamStatus::kMatched;
        ++state.matches;
      } catch (const LowScoreError& e) {
        out.score = e.best_score();
        out.status = SlamStatus::kLowScore;
        ++state.low_scores;
      }
    }
    state.last_match_pose = pose;
  }
  integrate_scan(state.grid, geom::compose(pose, p.base_to_lidar), scan);
  state.pose = pose;
  out.map_pose = pose;
  return out;
}

}  // namespace dronav::mapping
