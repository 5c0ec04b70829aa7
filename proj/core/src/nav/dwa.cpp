#include "dronav/nav/dwa.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dronav::nav {

std::vector<std::string> DwaParams::validate() const {
  std::vector<std::string> errs;
  if (v_samples < 3) errs.push_back("v_samples: must be >= 3");
  if (w_samples < 3) errs.push_back("w_samples: must be >= 3");
  if (!(sim_horizon > 0)) errs.push_back("sim_horizon: must be > 0");
  if (!(control_period > 0)) errs.push_back("control_period: must be > 0");
  if (!(v_max >= v_min)) errs.push_back("v_max: must be >= v_min");
  if (!(w_max > 0)) errs.push_back("w_max: must be > 0");
  if (!(acc_v > 0) || !(acc_w > 0)) errs.push_back("acc_v/acc_w: must be > 0");
  if (weights.heading < 0 || weights.clearance < 0 || weights.velocity < 0 || weights.path < 0)
    errs.push_back("weights: must be >= 0");
  if (!(clearance_cap > 0)) errs.push_back("clearance_cap: must be > 0");
  if (!(cross_track_deadband >= 0)) errs.push_back("cross_track_deadband: must be >= 0");
  return errs;
}

geom::Pose2D arc_pose(const geom::Pose2D& start, double v, double w, double t) {
  if (std::abs(w) < 1e-9) {
    return {start.x + v * t * std::cos(start.theta), start.y + v * t * std::sin(start.theta), start.theta};
  }
  const double th = start.theta + w * t;
  const double r = v / w;
  return {start.x + r * (std::sin(th) - std::sin(start.theta)), start.y - r * (std::cos(th) - std::cos(start.theta)),
          th};
}

namespace {

// Cells crossed by the segment a-b (Amanatides-Woo), checked for cost >= 253.
bool segment_blocked(const Costmap& cm, geom::Vec2 a, geom::Vec2 b) {
  const auto& g = cm.geometry();
  mapping::CellIndex c = g.cell_of(a);
  const mapping::CellIndex end = g.cell_of(b);
  if (cm.blocked(c)) return true;
  const double dx = b.x - a.x, dy = b.y - a.y;
  const int sx = dx > 0 ? 1 : -1, sy = dy > 0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  auto boundary = [&](double origin, int idx, int step) { return origin + (idx + (step > 0 ? 1 : 0)) * g.resolution; };
  double t_max_x = dx != 0 ? (boundary(g.origin.x, c.x, sx) - a.x) / dx : inf;
  double t_max_y = dy != 0 ? (boundary(g.origin.y, c.y, sy) - a.y) / dy : inf;
  const double t_dx = dx != 0 ? g.resolution / std::abs(dx) : inf;
  const double t_dy = dy != 0 ? g.resolution / std::abs(dy) : inf;
  for (int guard = 0; !(c == end) && guard < 10000; ++guard) {
    if (t_max_x < t_max_y) {
      if (t_max_x > 1.0) break;
      c.x += sx;
      t_max_x += t_dx;
    } else {
      if (t_max_y > 1.0) break;
      c.y += sy;
      t_max_y += t_dy;
    }
    if (cm.blocked(c)) return true;
  }
  return cm.blocked(end);
}

int arc_steps(const Costmap& cm, double v, double w, double horizon) {
  const double by_len = std::abs(v) * horizon / (0.25 * cm.geometry().resolution);
  const double by_turn = std::abs(w) * horizon / 0.05;
  return std::max(1, static_cast<int>(std::ceil(std::max(by_len, by_turn))));
}

double point_segment_distance(geom::Vec2 p, geom::Vec2 a, geom::Vec2 b) {
  const geom::Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

}  // namespace

bool arc_blocked(const Costmap& cm, const geom::Pose2D& start, double v, double w, double horizon) {
  const int n = arc_steps(cm, v, w, horizon);
  geom::Vec2 prev = start.position();
  for (int i = 1; i <= n; ++i) {
    const geom::Vec2 cur = arc_pose(start, v, w, horizon * i / n).position();
    if (segment_blocked(cm, prev, cur)) return true;
    prev = cur;
  }
  return cm.blocked(cm.geometry().cell_of(start.position()));
}

std::size_t lookahead_index(const Path& path, const geom::Pose2D& pose, std::size_t progress, double lookahead) {
  for (std::size_t i = progress; i < path.waypoints.size(); ++i)
    if ((path.waypoints[i].position() - pose.position()).norm() >= lookahead) return i;
  return path.waypoints.size() - 1;
}

std::vector<ArcCandidate> score_arcs(const Costmap& cm, const DwaState& s, const Path& path, const DwaParams& p,
                                     std::size_t progress) {
  if (path.empty()) throw Error("plan_local needs a non-empty path");
  progress = std::min(progress, path.waypoints.size() - 1);
  const double v_lo = std::max(p.v_min, s.v - p.acc_v * p.control_period);
  const double v_hi = std::max(v_lo, std::min(p.v_max, s.v + p.acc_v * p.control_period));
  const double w_lo = std::max(-p.w_max, s.w - p.acc_w * p.control_period);
  const double w_hi = std::max(w_lo, std::min(p.w_max, s.w + p.acc_w * p.control_period));

  const geom::Vec2 target = path.waypoints[lookahead_index(path, s.pose, progress, p.lookahead)].position();
  const std::size_t seg_end = std::min(path.waypoints.size(), progress + 60);

  std::vector<ArcCandidate> out;
  out.reserve(static_cast<std::size_t>(p.v_samples * p.w_samples));
  for (int iv = 0; iv < p.v_samples; ++iv) {
    const double v = v_lo + (v_hi - v_lo) * iv / (p.v_samples - 1);
    for (int iw = 0; iw < p.w_samples; ++iw) {
      double w = w_lo + (w_hi - w_lo) * iw / (p.w_samples - 1);
      if (std::abs(w) < 1e-12) w = 0.0;
      ArcCandidate c;
      c.v = v;
      c.w = w;
      c.admissible = !arc_blocked(cm, s.pose, v, w, p.sim_horizon);
      if (c.admissible) {
        const int n = arc_steps(cm, v, w, p.sim_horizon);
        double clearance = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= n; ++i) {
          const geom::Vec2 q = arc_pose(s.pose, v, w, p.sim_horizon * i / n).position();
          clearance = std::min(clearance, cm.distance(cm.geometry().cell_of(q)));
        }
        const geom::Pose2D end = arc_pose(s.pose, v, w, p.sim_horizon);
        const geom::Vec2 to_target = target - end.position();
        const double bearing = to_target.norm() > 1e-9 ? std::atan2(to_target.y, to_target.x) : end.theta;
        c.heading = 1.0 - std::abs(geom::angle_diff(bearing, end.theta)) / std::numbers::pi;
        c.clearance = std::min(clearance, p.clearance_cap) / p.clearance_cap;
        c.velocity = p.v_max > 0 ? v / p.v_max : 0.0;
        double ct = (end.position() - path.waypoints[progress].position()).norm();
        for (std::size_t i = progress; i + 1 < seg_end; ++i)
          ct = std::min(ct, point_segment_distance(end.position(), path.waypoints[i].position(),
                                                   path.waypoints[i + 1].position()));
        // corner cutting is only free when it gets closer to the target
        if (to_target.norm() < (target - s.pose.position()).norm()) ct = std::max(0.0, ct - p.cross_track_deadband);
        c.cross_track = std::min(ct, p.cross_track_cap);
        c.score = p.weights.heading * c.heading + p.weights.clearance * c.clearance +
                  p.weights.velocity * c.velocity - p.weights.path * c.cross_track;
      }
      out.push_back(c);
    }
  }
  return out;
}

DwaResult plan_local(const Costmap& cm, const DwaState& s, const Path& path, const DwaParams& p,
                     std::size_t progress) {
  const auto arcs = score_arcs(cm, s, path, p, progress);
  const ArcCandidate* best = nullptr;
  int admissible = 0;
  for (const auto& c : arcs) {
    if (!c.admissible) continue;
    ++admissible;
    if (best == nullptr) {
      best = &c;
      continue;
    }
    if (c.score != best->score) {
      if (c.score > best->score) best = &c;
      continue;
    }
    if (std::abs(c.w) != std::abs(best->w)) {
      if (std::abs(c.w) < std::abs(best->w)) best = &c;
      continue;
    }
    if (c.v != best->v) {
      if (c.v > best->v) best = &c;
      continue;
    }
    if (c.w > best->w) best = &c;
  }
  if (best == nullptr) throw BlockedError("every sampled arc is in collision");
  DwaResult r;
  r.v = best->v;
  r.w = best->w;
  r.score = best->score;
  r.admissible = admissible;
  r.twist = control::Twist::planar(best->v, best->w);
  return r;
}

}  // namespace dronav::nav
