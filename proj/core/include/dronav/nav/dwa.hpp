#pragma once

#include <string>
#include <vector>

#include "dronav/control/flight_controller.hpp"
#include "dronav/error.hpp"
#include "dronav/nav/costmap.hpp"
#include "dronav/nav/planner.hpp"

namespace dronav::nav {

class BlockedError : public Error {
  using Error::Error;
};

struct DwaWeights {
  double heading = 0.4;
  double clearance = 0.2;
  double velocity = 0.1;
  double path = 0.3;
};

struct DwaParams {
  double v_max = 0.5;   // m/s
  double v_min = 0.0;   // m/s
  double w_max = 1.5;   // rad/s
  double acc_v = 1.0;   // m/s^2
  double acc_w = 3.0;   // rad/s^2
  double control_period = 0.1;  // s, window = current +- acc * period
  double sim_horizon = 1.5;     // s
  int v_samples = 11;
  int w_samples = 21;
  DwaWeights weights;
  double lookahead = 0.5;       // m
  double clearance_cap = 0.55;  // m, clearance score saturates here
  double cross_track_cap = 1.0; // m
  double cross_track_deadband = 0.1;  // m, ignored on arcs that approach the target

  std::vector<std::string> validate() const;
};

struct DwaState {
  geom::Pose2D pose;
  double v = 0.0;  // currently commanded forward speed
  double w = 0.0;  // currently commanded yaw rate
};

struct ArcCandidate {
  double v = 0.0;
  double w = 0.0;
  bool admissible = false;
  double heading = 0.0;    // [0, 1], 1 = facing the lookahead point at the arc end
  double clearance = 0.0;  // [0, 1]
  double velocity = 0.0;   // [0, 1]
  double cross_track = 0.0;  // m, capped
  double score = 0.0;
};

struct DwaResult {
  control::Twist twist;
  double v = 0.0;
  double w = 0.0;
  double score = 0.0;
  int admissible = 0;
};

/// Pose after following (v, w) from `start` for `t` seconds.
geom::Pose2D arc_pose(const geom::Pose2D& start, double v, double w, double t);

/// True when the centre trace of the arc enters any cell with cost >= 253
/// within `horizon`.
bool arc_blocked(const Costmap& cm, const geom::Pose2D& start, double v, double w, double horizon);

/// Index of the path waypoint used as the heading target: the first one at
/// least `lookahead` from `pose`, starting at `progress`; the last otherwise.
std::size_t lookahead_index(const Path& path, const geom::Pose2D& pose, std::size_t progress, double lookahead);

/// Every sampled candidate, in sampling order (v ascending, then w ascending).
std::vector<ArcCandidate> score_arcs(const Costmap& cm, const DwaState& s, const Path& path, const DwaParams& p,
                                     std::size_t progress = 0);

/// Best admissible candidate. Equal scores go to the smaller |w|, then the
/// larger v, then the positive w. Throws BlockedError when none is admissible.
DwaResult plan_local(const Costmap& cm, const DwaState& s, const Path& path, const DwaParams& p,
                     std::size_t progress = 0);

}  // namespace dronav::nav
