#include "dronav/runtime/bus.hpp"

namespace dronav::runtime {

std::vector<TopicStats> TopicBus::stats() const {
  std::vector<TopicStats> out;
  auto add = [&](const auto& t) { out.push_back({t.name(), t.published(), t.dropped()}); };
  add(scan);
  add(twist_cmd);
  add(truth_state);
  add(slam_pose);
  add(amcl_pose);
  add(grid_snapshot);
  add(costmap_snapshot);
  add(path);
  add(nav_status);
  add(transform_updates);
  return out;
}

}  // namespace dronav::runtime
