#include "dronav/mapping/scan_update.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace dronav::mapping {

void integrate_scan(LogOddsGrid& grid, const geom::Pose2D& sensor_pose, const sensing::LaserScan& scan) {
  const auto& spec = scan.spec;
  const geom::Vec2 origin = sensor_pose.position();
  const int n = static_cast<int>(scan.ranges.size());

  std::vector<geom::Vec2> ends(n);
  std::vector<char> hit(n);
  grid.ensure_contains(origin);
  for (int i = 0; i < n; ++i) {
    const double r = scan.ranges[i];
    hit[i] = sensing::LaserScan::is_return(r);
    const double len = hit[i] ? r : spec.range_max;
    const double a = sensor_pose.theta + spec.beam_angle(i);
    ends[i] = origin + geom::Vec2{len * std::cos(a), len * std::sin(a)};
    grid.ensure_contains(ends[i]);
  }

  const GridGeometry& g = grid.geometry();
  const CellIndex start = g.cell_of(origin);
  std::vector<std::size_t> hits, passes;
  for (int i = 0; i < n; ++i) {
    const CellIndex end = g.cell_of(ends[i]);
    for (const CellIndex c : line_cells(start, end)) passes.push_back(g.index(c));
    if (hit[i]) hits.push_back(g.index(end));
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  std::sort(passes.begin(), passes.end());
  passes.erase(std::unique(passes.begin(), passes.end()), passes.end());
  std::vector<std::size_t> cleared;
  std::set_difference(passes.begin(), passes.end(), hits.begin(), hits.end(), std::back_inserter(cleared));

  const double l_occ = grid.params().l_occ();
  const double l_free = grid.params().l_free();
  auto cell_at = [&](std::size_t idx) {
    return CellIndex{static_cast<int>(idx % static_cast<std::size_t>(g.width)),
                     static_cast<int>(idx / static_cast<std::size_t>(g.width))};
  };
  for (std::size_t idx : cleared) grid.add(cell_at(idx), -l_free);
  for (std::size_t idx : hits) grid.add(cell_at(idx), l_occ);
}

}  // namespace dronav::mapping
