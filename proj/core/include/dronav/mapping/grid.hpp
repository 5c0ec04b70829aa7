#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dronav/geom/transform.hpp"

namespace dronav::mapping {

struct CellIndex {
  int x = 0;
  int y = 0;
  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Axis-aligned raster geometry. `origin` is the world position of the outer
/// corner of cell (0,0); rows run along +y.
struct GridGeometry {
  double resolution = 0.05;
  int width = 0;
  int height = 0;
  geom::Vec2 origin;

  CellIndex cell_of(geom::Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin.x) / resolution)),
            static_cast<int>(std::floor((p.y - origin.y) / resolution))};
  }
  geom::Vec2 center_of(CellIndex c) const {
    return {origin.x + (c.x + 0.5) * resolution, origin.y + (c.y + 0.5) * resolution};
  }
  bool contains(CellIndex c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  std::size_t index(CellIndex c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.x);
  }
  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

struct LogOddsParams {
  double p_hit = 0.7;
  double p_free = 0.45;
  double l_min = -4.0;
  double l_max = 4.0;
  double occ_threshold = 2.0;
  double free_threshold = -1.0;

  double l_occ() const { return std::log(p_hit / (1.0 - p_hit)); }
  /// Magnitude of the decrement applied to traversed cells.
  double l_free() const { return -std::log(p_free / (1.0 - p_free)); }
};

class LogOddsGrid {
 public:
  LogOddsGrid() = default;
  LogOddsGrid(GridGeometry geometry, LogOddsParams params = {});

  const GridGeometry& geometry() const { return geo_; }
  const LogOddsParams& params() const { return params_; }
  const std::vector<double>& cells() const { return cells_; }

  double at(CellIndex c) const { return cells_[geo_.index(c)]; }
  /// Adds `delta` and clamps to [l_min, l_max].
  void add(CellIndex c, double delta);
  void set(CellIndex c, double value);

  /// Grows the grid by doubling toward whichever side `p` lies beyond, until
  /// `p` falls inside. Existing cells keep their world position. Returns true
  /// if the grid changed size.
  bool ensure_contains(geom::Vec2 p);

  /// True when any cell holds positive log-odds.
  bool has_occupied_mass() const;

 private:
  GridGeometry geo_;
  LogOddsParams params_;
  std::vector<double> cells_;
};

enum class CellState : std::uint8_t { kFree = 0, kOccupied = 1, kUnknown = 2 };

struct OccupancyGrid {
  GridGeometry geometry;
  std::vector<CellState> cells;

  OccupancyGrid() = default;
  explicit OccupancyGrid(GridGeometry g, CellState fill = CellState::kUnknown)
      : geometry(g), cells(g.size(), fill) {}

  CellState at(CellIndex c) const { return cells[geometry.index(c)]; }
  void set(CellIndex c, CellState s) { cells[geometry.index(c)] = s; }
  /// Cells outside the grid read as unknown.
  CellState at_or_unknown(CellIndex c) const {
    return geometry.contains(c) ? at(c) : CellState::kUnknown;
  }
  std::size_t count(CellState s) const;
  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;
};

OccupancyGrid to_occupancy(const LogOddsGrid& grid);

/// Cells on the integer line from `a` to `b`, including `a`, excluding `b`.
std::vector<CellIndex> line_cells(CellIndex a, CellIndex b);

}  // namespace dronav::mapping
