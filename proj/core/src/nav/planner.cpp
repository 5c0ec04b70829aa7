#include "dronav/nav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace dronav::nav {

namespace {

struct OpenEntry {
  double f;
  double h;
  std::size_t index;
  bool operator>(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (h != o.h) return h > o.h;
    return index > o.index;
  }
};

}  // namespace

Path plan_cells(const Costmap& cm, mapping::CellIndex start, mapping::CellIndex goal) {
  const auto& g = cm.geometry();
  if (!g.contains(goal) || cm.blocked(goal)) throw GoalInCollisionError("goal cell is in collision");
  if (!g.contains(start) || cm.blocked(start)) throw StartInCollisionError("start cell is in collision");

  const std::size_t n = g.size();
  const std::size_t goal_idx = g.index(goal);
  std::vector<double> cost_so_far(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(n, n);
  std::vector<char> closed(n, 0);
  auto heuristic = [&](int x, int y) { return std::hypot(double(x - goal.x), double(y - goal.y)); };

  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
  const std::size_t start_idx = g.index(start);
  cost_so_far[start_idx] = 0.0;
  open.push({heuristic(start.x, start.y), heuristic(start.x, start.y), start_idx});

  static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  bool found = false;
  while (!open.empty()) {
    const OpenEntry cur = open.top();
    open.pop();
    if (closed[cur.index]) continue;
    closed[cur.index] = 1;
    if (cur.index == goal_idx) {
      found = true;
      break;
    }
    const int cx = static_cast<int>(cur.index % g.width), cy = static_cast<int>(cur.index / g.width);
    for (int k = 0; k < 8; ++k) {
      const mapping::CellIndex nb{cx + kDx[k], cy + kDy[k]};
      if (!g.contains(nb)) continue;
      const std::size_t ni = g.index(nb);
      if (closed[ni]) continue;
      const int c = cm.cost(nb);
      if (c >= kInscribed) continue;
      const double tentative = cost_so_far[cur.index] + step_cost(k >= 4, c);
      if (tentative < cost_so_far[ni]) {
        cost_so_far[ni] = tentative;
        parent[ni] = cur.index;
        const double h = heuristic(nb.x, nb.y);
        open.push({tentative + h, h, ni});
      }
    }
  }
  if (!found) throw NoPathError("no path to goal");

  Path path;
  path.cost = cost_so_far[goal_idx];
  for (std::size_t i = goal_idx; i != n; i = parent[i])
    path.cells.push_back({static_cast<int>(i % g.width), static_cast<int>(i / g.width)});
  std::reverse(path.cells.begin(), path.cells.end());
  for (std::size_t i = 0; i < path.cells.size(); ++i) {
    const geom::Vec2 p = g.center_of(path.cells[i]);
    double heading = 0.0;
    if (i + 1 < path.cells.size()) {
      const geom::Vec2 q = g.center_of(path.cells[i + 1]);
      heading = std::atan2(q.y - p.y, q.x - p.x);
    } else if (i > 0) {
      heading = path.waypoints.back().theta;
    }
    path.waypoints.push_back({p.x, p.y, heading});
  }
  return path;
}

Path plan_global(const Costmap& cm, const geom::Pose2D& start, const geom::Pose2D& goal) {
  const auto& g = cm.geometry();
  Path p = plan_cells(cm, g.cell_of(start.position()), g.cell_of(goal.position()));
  p.waypoints.back().theta = goal.theta;
  return p;
}

}  // namespace dronav::nav
