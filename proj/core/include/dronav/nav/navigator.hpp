#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dronav/control/flight_controller.hpp"
#include "dronav/nav/costmap.hpp"
#include "dronav/nav/dwa.hpp"
#include "dronav/nav/planner.hpp"

namespace dronav::nav {

enum class NavState : std::uint8_t { kIdle, kPlanning, kFollowing, kSucceeded, kFailed, kRecovering };

const char* to_string(NavState s);

struct NavTolerances {
  double xy = 0.15;       // m
  double yaw = 0.17453;   // rad (10 deg)
};

struct NavigatorParams {
  DwaParams dwa;
  NavTolerances tolerances;
  double blocked_replan_after = 2.0;  // s of continuous BlockedError before replanning
  double recovery_duration = 2.0;     // s of rotate-in-place
  double recovery_rate = 0.6;         // rad/s
  int max_failures = 3;               // consecutive planning failures before FAILED
  double approach_fraction = 0.5;     // switch to in-place alignment inside this share of xy tolerance
  double align_gain = 1.5;            // 1/s, yaw-rate per radian of heading error
  double align_rate_max = 0.8;        // rad/s
  double slowdown_radius = 0.8;       // m, v_max scales down linearly inside this distance
  double min_approach_speed = 0.05;   // m/s
  // While following, success also needs the pose inside these shares of the
  // tolerances, leaving room for localization error.
  double settle_xy_fraction = 0.8;
  double settle_yaw_fraction = 0.5;
  double stall_speed = 0.01;          // DWA output below this in v and w counts as a stall
  // Global plans first try to keep this much clearance beyond robot_radius,
  // falling back to the plain costmap when no such plan exists.
  double plan_margin = 0.05;          // m
};

struct NavStatus {
  NavState state = NavState::kIdle;
  std::optional<geom::Pose2D> active_goal;
  std::string diagnostics;
};

struct NavOutput {
  control::Twist twist;
  bool replanned = false;
};

/// Goal-to-twist orchestration. `tick` is called at a fixed period with the
/// localized pose and the current costmap.
class Navigator {
 public:
  explicit Navigator(NavigatorParams params = {}) : params_(params) {}

  void set_goal(const geom::Pose2D& goal);
  void cancel();

  NavOutput tick(const geom::Pose2D& pose, const Costmap& cm, double dt);

  const NavStatus& status() const { return status_; }
  const Path& path() const { return path_; }
  std::size_t progress() const { return progress_; }
  /// Plans after the first for the current goal.
  int replans() const { return replans_; }
  /// Every plan since construction.
  int plans() const { return plans_; }
  const NavigatorParams& params() const { return params_; }

 private:
  bool within_tolerance(const geom::Pose2D& pose, double xy_share = 1.0, double yaw_share = 1.0) const;
  bool path_invalid(const Costmap& cm) const;
  Path plan_with_margin(const Costmap& cm, const geom::Pose2D& pose, const geom::Pose2D& goal) const;
  NavOutput run_planning(const geom::Pose2D& pose, const Costmap& cm);
  NavOutput run_following(const geom::Pose2D& pose, const Costmap& cm, double dt);
  void fail_attempt(const std::string& why);
  void finish(NavState s, const std::string& why);

  NavigatorParams params_;
  NavStatus status_;
  Path path_;
  std::size_t progress_ = 0;
  double cmd_v_ = 0.0;
  double cmd_w_ = 0.0;
  double blocked_time_ = 0.0;
  double recovery_time_ = 0.0;
  int failures_ = 0;
  int replans_ = 0;
  int plans_ = 0;
  int goal_plans_ = 0;
  bool aligning_ = false;
};

}  // namespace dronav::nav
