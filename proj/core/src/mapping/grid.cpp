#include "dronav/mapping/grid.hpp"

#include <algorithm>
#include <cstdlib>

#include "dronav/error.hpp"

namespace dronav::mapping {

LogOddsGrid::LogOddsGrid(GridGeometry geometry, LogOddsParams params)
    : geo_(geometry), params_(params) {
  if (!(geo_.resolution > 0.0)) throw Error("grid resolution must be positive");
  if (geo_.width <= 0 || geo_.height <= 0) throw Error("grid must have at least one cell");
  if (!(params_.l_min < 0.0 && params_.l_max > 0.0)) throw Error("log-odds clamp must straddle 0");
  cells_.assign(geo_.size(), 0.0);
}

void LogOddsGrid::add(CellIndex c, double delta) {
  double& v = cells_[geo_.index(c)];
  v = std::clamp(v + delta, params_.l_min, params_.l_max);
}

void LogOddsGrid::set(CellIndex c, double value) {
  cells_[geo_.index(c)] = std::clamp(value, params_.l_min, params_.l_max);
}

bool LogOddsGrid::ensure_contains(geom::Vec2 p) {
  bool grew = false;
  for (CellIndex c = geo_.cell_of(p); !geo_.contains(c); c = geo_.cell_of(p)) {
    int shift_x = 0, shift_y = 0;
    GridGeometry next = geo_;
    if (c.x < 0 || c.x >= geo_.width) {
      next.width = geo_.width * 2;
      if (c.x < 0) shift_x = geo_.width;
    } else {
      next.height = geo_.height * 2;
      if (c.y < 0) shift_y = geo_.height;
    }
    next.origin.x -= shift_x * geo_.resolution;
    next.origin.y -= shift_y * geo_.resolution;
    std::vector<double> cells(next.size(), 0.0);
    for (int y = 0; y < geo_.height; ++y)
      std::copy_n(cells_.begin() + static_cast<std::ptrdiff_t>(y) * geo_.width, geo_.width,
                  cells.begin() + static_cast<std::ptrdiff_t>(y + shift_y) * next.width + shift_x);
    geo_ = next;
    cells_ = std::move(cells);
    grew = true;
  }
  return grew;
}

bool LogOddsGrid::has_occupied_mass() const {
  return std::any_of(cells_.begin(), cells_.end(), [](double v) { return v > 0.0; });
}

std::size_t OccupancyGrid::count(CellState s) const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), s));
}

OccupancyGrid to_occupancy(const LogOddsGrid& grid) {
  OccupancyGrid out(grid.geometry());
  const auto& p = grid.params();
  for (std::size_t i = 0; i < out.cells.size(); ++i) {
    const double l = grid.cells()[i];
    out.cells[i] = l > p.occ_threshold    ? CellState::kOccupied
                   : l < p.free_threshold ? CellState::kFree
                                          : CellState::kUnknown;
  }
  return out;
}

std::vector<CellIndex> line_cells(CellIndex a, CellIndex b) {
  std::vector<CellIndex> out;
  const int dx = std::abs(b.x - a.x), dy = -std::abs(b.y - a.y);
  const int sx = a.x < b.x ? 1 : -1, sy = a.y < b.y ? 1 : -1;
  int err = dx + dy;
  out.reserve(static_cast<std::size_t>(std::max(dx, -dy)) + 1);
  CellIndex c = a;
  while (!(c == b)) {
    out.push_back(c);
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      c.x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      c.y += sy;
    }
  }
  return out;
}

}  // namespace dronav::mapping
