#include "dronav/nav/costmap.hpp"

#include <cmath>

#include "dronav/mapping/distance_field.hpp"

namespace dronav::nav {

std::uint8_t inflation_cost(double d, const CostmapParams& p) {
  if (d <= 0.0) return kLethal;
  if (d <= p.robot_radius) return kInscribed;
  if (d > p.inflation_radius) return 0;
  return static_cast<std::uint8_t>(std::lround(252.0 * std::exp(-p.cost_decay * (d - p.robot_radius))));
}

Costmap build_costmap(const mapping::OccupancyGrid& occ, const CostmapParams& params) {
  const auto& g = occ.geometry;
  std::vector<char> seeds(occ.cells.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = occ.cells[i] == mapping::CellState::kOccupied;
  std::vector<double> dist = mapping::distance_transform(seeds, g.width, g.height);
  std::vector<std::uint8_t> raw(occ.cells.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    dist[i] *= g.resolution;
    if (occ.cells[i] == mapping::CellState::kUnknown && !params.unknown_traversable)
      raw[i] = kUnknownMarker;
    else
      raw[i] = inflation_cost(dist[i], params);
  }
  return Costmap(g, std::move(raw), std::move(dist), params);
}

Costmap Costmap::tightened(std::uint8_t limit) const {
  Costmap out = *this;
  for (auto& v : out.raw_)
    if (v != kUnknownMarker && v > limit && v < kLethal) v = kInscribed;
  return out;
}

}  // namespace dronav::nav
