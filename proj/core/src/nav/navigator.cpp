#include "dronav/nav/navigator.hpp"

#include <algorithm>
#include <cmath>

namespace dronav::nav {

const char* to_string(NavState s) {
  switch (s) {
    case NavState::kIdle: return "IDLE";
    case NavState::kPlanning: return "PLANNING";
    case NavState::kFollowing: return "FOLLOWING";
    case NavState::kSucceeded: return "SUCCEEDED";
    case NavState::kFailed: return "FAILED";
    case NavState::kRecovering: return "RECOVERING";
  }
  return "UNKNOWN";
}

void Navigator::set_goal(const geom::Pose2D& goal) {
  status_.state = NavState::kPlanning;
  status_.active_goal = goal;
  status_.diagnostics.clear();
  path_ = {};
  progress_ = 0;
  cmd_v_ = cmd_w_ = 0.0;
  blocked_time_ = recovery_time_ = 0.0;
  failures_ = 0;
  goal_plans_ = replans_ = 0;
  aligning_ = false;
}

void Navigator::cancel() {
  status_ = {};
  path_ = {};
  cmd_v_ = cmd_w_ = 0.0;
}

bool Navigator::within_tolerance(const geom::Pose2D& pose, double xy_share, double yaw_share) const {
  const auto& g = *status_.active_goal;
  return (pose.position() - g.position()).norm() <= xy_share * params_.tolerances.xy &&
         std::abs(geom::angle_diff(pose.theta, g.theta)) <= yaw_share * params_.tolerances.yaw;
}

bool Navigator::path_invalid(const Costmap& cm) const {
  for (std::size_t i = progress_; i < path_.cells.size(); ++i)
    if (cm.blocked(path_.cells[i])) return true;
  return false;
}

void Navigator::finish(NavState s, const std::string& why) {
  status_.state = s;
  status_.diagnostics = why;
  cmd_v_ = cmd_w_ = 0.0;
}

void Navigator::fail_attempt(const std::string& why) {
  ++failures_;
  cmd_v_ = cmd_w_ = 0.0;
  if (failures_ >= params_.max_failures) {
    finish(NavState::kFailed, why + " (" + std::to_string(failures_) + " consecutive failures)");
    return;
  }
  status_.state = NavState::kRecovering;
  status_.diagnostics = why;
  recovery_time_ = 0.0;
}

Path Navigator::plan_with_margin(const Costmap& cm, const geom::Pose2D& pose, const geom::Pose2D& goal) const {
  if (params_.plan_margin > 0.0) {
    const auto limit = inflation_cost(cm.params().robot_radius + params_.plan_margin, cm.params());
    try {
      return plan_global(cm.tightened(limit), pose, goal);
    } catch (const Error&) {
    }
  }
  return plan_global(cm, pose, goal);
}

NavOutput Navigator::run_planning(const geom::Pose2D& pose, const Costmap& cm) {
  NavOutput out;
  if (within_tolerance(pose)) {
    finish(NavState::kSucceeded, "goal reached");
    return out;
  }
  try {
    path_ = plan_with_margin(cm, pose, *status_.active_goal);
    ++plans_;
    if (++goal_plans_ > 1) {
      ++replans_;
      out.replanned = true;
    }
    progress_ = 0;
    failures_ = 0;
    blocked_time_ = 0.0;
    status_.state = NavState::kFollowing;
    status_.diagnostics.clear();
  } catch (const GoalInCollisionError& e) {
    finish(NavState::kFailed, std::string("GoalInCollision: ") + e.what());
  } catch (const StartInCollisionError& e) {
    fail_attempt(std::string("StartInCollision: ") + e.what());
  } catch (const NoPathError& e) {
    fail_attempt(std::string("NoPath: ") + e.what());
  }
  return out;
}

NavOutput Navigator::run_following(const geom::Pose2D& pose, const Costmap& cm, double dt) {
  NavOutput out;
  const auto& goal = *status_.active_goal;
  if (within_tolerance(pose, params_.settle_xy_fraction, params_.settle_yaw_fraction)) {
    finish(NavState::kSucceeded, "goal reached");
    return out;
  }

  // Advance progress to the nearest waypoint within a short window ahead.
  {
    double best = (path_.waypoints[progress_].position() - pose.position()).norm();
    const std::size_t end = std::min(path_.waypoints.size(), progress_ + 40);
    for (std::size_t i = progress_ + 1; i < end; ++i) {
      const double d = (path_.waypoints[i].position() - pose.position()).norm();
      if (d < best) {
        best = d;
        progress_ = i;
      }
    }
  }

  if (path_invalid(cm)) {
    status_.state = NavState::kPlanning;
    status_.diagnostics = "path invalidated by costmap update";
    return run_planning(pose, cm);
  }

  const double dist = (goal.position() - pose.position()).norm();
  if (dist <= params_.approach_fraction * params_.tolerances.xy)
    aligning_ = true;
  else if (dist > params_.tolerances.xy)
    aligning_ = false;
  if (aligning_) {
    // Close enough: hold position and turn to the goal heading.
    const double err = geom::angle_diff(goal.theta, pose.theta);
    const double w = std::clamp(params_.align_gain * err, -params_.align_rate_max, params_.align_rate_max);
    cmd_v_ = 0.0;
    cmd_w_ = w;
    out.twist = control::Twist::planar(0.0, w);
    return out;
  }

  DwaParams p = params_.dwa;
  if (dist < params_.slowdown_radius)
    p.v_max = std::max(params_.min_approach_speed, p.v_max * dist / params_.slowdown_radius);
  try {
    const DwaResult r = plan_local(cm, {pose, std::min(cmd_v_, p.v_max), cmd_w_}, path_, p, progress_);
    cmd_v_ = r.v;
    cmd_w_ = r.w;
    out.twist = r.twist;
    if (std::abs(r.v) < params_.stall_speed && std::abs(r.w) < params_.stall_speed) {
      blocked_time_ += dt;
      if (blocked_time_ > params_.blocked_replan_after) {
        status_.state = NavState::kPlanning;
        status_.diagnostics = "local planner stalled";
        return run_planning(pose, cm);
      }
    } else {
      blocked_time_ = 0.0;
    }
  } catch (const BlockedError&) {
    blocked_time_ += dt;
    cmd_v_ = cmd_w_ = 0.0;
    status_.diagnostics = "local planner blocked";
    if (blocked_time_ > params_.blocked_replan_after) {
      status_.state = NavState::kPlanning;
      return run_planning(pose, cm);
    }
  }
  return out;
}

NavOutput Navigator::tick(const geom::Pose2D& pose, const Costmap& cm, double dt) {
  switch (status_.state) {
    case NavState::kIdle:
    case NavState::kSucceeded:
    case NavState::kFailed:
      return {};
    case NavState::kPlanning:
      return run_planning(pose, cm);
    case NavState::kFollowing:
      return run_following(pose, cm, dt);
    case NavState::kRecovering: {
      recovery_time_ += dt;
      if (recovery_time_ >= params_.recovery_duration) {
        status_.state = NavState::kPlanning;
        return run_planning(pose, cm);
      }
      NavOutput out;
      out.twist = control::Twist::planar(0.0, params_.recovery_rate);
      return out;
    }
  }
  return {};
}

}  // namespace dronav::nav
