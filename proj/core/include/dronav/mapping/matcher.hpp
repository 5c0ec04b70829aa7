#pragma once

#include "dronav/error.hpp"
#include "dronav/geom/transform.hpp"
#include "dronav/mapping/grid.hpp"
#include "dronav/sensing/lidar.hpp"

namespace dronav::mapping {

class LowScoreError : public Error {
 public:
  LowScoreError(double best_score);
  double best_score() const { return best_; }

 private:
  double best_;
};

struct SearchWindow {
  double dx = 0.3;      // m, half-width
  double dy = 0.3;      // m, half-width
  double dtheta = 0.0873;  // rad, half-width (5 deg)
  double angular_step = 0.5 * 3.14159265358979323846 / 180.0;
  /// Polish the best lattice pose by Gauss-Newton on a bilinear occupancy
  /// surface. The result stays within one lattice step and inside the window.
  bool subcell_refine = true;
};

struct MatchResult {
  geom::Pose2D pose;
  double score = 0.0;      // fraction of returns landing on cells with log-odds > 0
  bool converged = false;  // best pose lies strictly inside the window
};

/// Exhaustive correlative search around `initial` (sensor pose in the map
/// frame) in whole-cell translation steps and `angular_step` rotation steps.
/// Ties go to the smallest translation, then the smallest rotation. The
/// reported score is the lattice score.
/// Throws LowScoreError when the best score is below `min_score`.
MatchResult match_scan_to_map(const LogOddsGrid& grid, const sensing::LaserScan& scan,
                              const geom::Pose2D& initial, const SearchWindow& window = {},
                              double min_score = 0.3);

}  // namespace dronav::mapping
