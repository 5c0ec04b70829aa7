#pragma once

#include <vector>

#include "dronav/error.hpp"
#include "dronav/geom/transform.hpp"
#include "dronav/nav/costmap.hpp"

namespace dronav::nav {

class GoalInCollisionError : public Error {
  using Error::Error;
};
class StartInCollisionError : public Error {
  using Error::Error;
};
class NoPathError : public Error {
  using Error::Error;
};

struct Path {
  std::vector<geom::Pose2D> waypoints;  // cell centres; heading points at the next waypoint
  std::vector<mapping::CellIndex> cells;
  double cost = 0.0;                    // in cell units: sum of (1 | sqrt 2) * (1 + cost / 256)
  bool empty() const { return waypoints.empty(); }
};

/// Cost of entering a cell with traversal cost `cell_cost` by a straight
/// (diagonal = false) or diagonal move.
inline double step_cost(bool diagonal, int cell_cost) {
  return (diagonal ? 1.4142135623730951 : 1.0) * (1.0 + cell_cost / 256.0);
}

/// A* over the 8-connected grid with the Euclidean cell distance heuristic.
/// Open-list ties go to the smaller heuristic, then the lower row-major index.
Path plan_global(const Costmap& cm, const geom::Pose2D& start, const geom::Pose2D& goal);

/// Same search on cell indices.
Path plan_cells(const Costmap& cm, mapping::CellIndex start, mapping::CellIndex goal);

}  // namespace dronav::nav
