#pragma once

#include <cstdint>
#include <vector>

#include "dronav/mapping/grid.hpp"

namespace dronav::nav {

inline constexpr std::uint8_t kLethal = 254;
inline constexpr std::uint8_t kInscribed = 253;
/// Stored for UNKNOWN map cells; read through Costmap::cost() as `unknown_cost`.
inline constexpr std::uint8_t kUnknownMarker = 255;

struct CostmapParams {
  double robot_radius = 0.35;      // m, body radius plus footprint padding
  double inflation_radius = 0.55;  // m
  double cost_decay = 3.0;         // 1/m
  bool unknown_traversable = false;
  std::uint8_t unknown_cost = kInscribed;  // used when unknown cells are not traversable
};

class Costmap {
 public:
  Costmap() = default;
  Costmap(mapping::GridGeometry geometry, std::vector<std::uint8_t> raw, std::vector<double> distance,
          CostmapParams params)
      : geo_(geometry), raw_(std::move(raw)), dist_(std::move(distance)), params_(params) {}

  const mapping::GridGeometry& geometry() const { return geo_; }
  const CostmapParams& params() const { return params_; }
  /// Raw cells, 0..254 or kUnknownMarker.
  const std::vector<std::uint8_t>& raw() const { return raw_; }

  /// Traversal cost of a cell; off-grid cells are lethal.
  std::uint8_t cost(mapping::CellIndex c) const {
    if (!geo_.contains(c)) return kLethal;
    const std::uint8_t v = raw_[geo_.index(c)];
    return v == kUnknownMarker ? params_.unknown_cost : v;
  }
  std::uint8_t cost_at(geom::Vec2 p) const { return cost(geo_.cell_of(p)); }
  bool blocked(mapping::CellIndex c) const { return cost(c) >= kInscribed; }
  /// Distance in meters from the cell centre to the nearest occupied cell
  /// centre; infinity with no obstacles. Off-grid reads as 0.
  double distance(mapping::CellIndex c) const { return geo_.contains(c) ? dist_[geo_.index(c)] : 0.0; }

  std::uint64_t version = 0;

  /// Copy in which every non-lethal cell costing more than `limit` reads as
  /// inscribed.
  Costmap tightened(std::uint8_t limit) const;

 private:
  mapping::GridGeometry geo_;
  std::vector<std::uint8_t> raw_;
  std::vector<double> dist_;
  CostmapParams params_;
};

/// Cost from distance `d` (m) to the nearest obstacle.
std::uint8_t inflation_cost(double d, const CostmapParams& p);

Costmap build_costmap(const mapping::OccupancyGrid& occ, const CostmapParams& params = {});

}  // namespace dronav::nav
