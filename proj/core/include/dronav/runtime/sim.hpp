#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dronav/control/autopilot.hpp"
#include "dronav/geom/transform_tree.hpp"
#include "dronav/localize/filter.hpp"
#include "dronav/mapping/slam.hpp"
#include "dronav/nav/costmap.hpp"
#include "dronav/nav/navigator.hpp"
#include "dronav/runtime/bus.hpp"
#include "dronav/runtime/clock.hpp"
#include "dronav/runtime/commands.hpp"
#include "dronav/runtime/scenario.hpp"

namespace dronav::runtime {

struct CollisionEvent {
  double time = 0.0;
  geom::Vec2 position;
  std::optional<std::size_t> shape_id;
  bool out_of_bounds = false;
};

struct SimSnapshot {
  double time = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t sensor_ticks = 0;
  Mode mode = Mode::kMapping;
  vehicle::RigidBodyState truth;
  control::TakeoffPhase phase = control::TakeoffPhase::kClimb;
  std::optional<geom::Pose2D> estimate;  // SLAM pose or AMCL mean; empty before localization
  nav::NavStatus nav;
  control::Twist twist;  // command in effect
  int collisions = 0;
  bool in_contact = false;
  bool crashed = false;
  std::string crash_reason;
  std::uint64_t hash = 0;
};

/// Deterministic closed-loop simulation. Single owner; not thread-safe.
class Sim {
 public:
  explicit Sim(Scenario scenario);

  /// Advances n physics steps. Per step: control tick work (arbitrate
  /// twist_cmd, bridge, attitude loop, mixer), dynamics, collision check,
  /// then sensor tick work (scan, odometry, SLAM or AMCL, nav) and publishing.
  /// A crash freezes the simulation; later calls return immediately.
  SimSnapshot step(std::uint64_t n = 1);

  /// Runs until `seconds` of sim time have passed or a crash occurs.
  SimSnapshot run_for(double seconds);

  /// Applies an operator command between physics steps.
  CommandResult apply(const Command& cmd);

  SimSnapshot snapshot() const;
  std::uint64_t hash() const { return hash_.value(); }

  const Scenario& scenario() const { return scenario_; }
  const SimClock& clock() const { return clock_; }
  Mode mode() const { return mode_; }
  const vehicle::RigidBodyState& truth() const { return truth_; }
  geom::Pose2D truth_pose() const;
  const vehicle::WorldModel& world() const { return world_; }
  const control::Autopilot& autopilot() const { return autopilot_; }
  bool hovering() const { return autopilot_.phase() == control::TakeoffPhase::kHold; }
  bool crashed() const { return crashed_; }
  int collisions() const { return static_cast<int>(collision_events_.size()); }
  const std::vector<CollisionEvent>& collision_events() const { return collision_events_; }

  /// Null outside MAPPING.
  const mapping::SlamState* slam() const { return slam_ ? &*slam_ : nullptr; }
  /// Null outside NAVIGATION.
  const localize::Amcl* amcl() const { return amcl_ ? &*amcl_ : nullptr; }
  const nav::Navigator* navigator() const { return navigator_ ? &*navigator_ : nullptr; }
  const nav::Costmap* costmap() const { return costmap_ ? &*costmap_ : nullptr; }
  const mapping::OccupancyGrid* static_map() const { return static_map_ ? &*static_map_ : nullptr; }
  std::uint64_t costmap_version() const { return costmap_version_; }
  std::uint64_t grid_version() const { return grid_version_; }

  std::optional<geom::Pose2D> estimate() const;
  const geom::Pose2D& odom_pose() const { return odom_pose_; }
  const geom::TransformTree& tf() const { return tf_; }
  const sensing::LaserScan* last_scan() const { return prev_scan_ ? &*prev_scan_ : nullptr; }
  const control::Twist& twist_in_effect() const { return twist_; }
  std::uint64_t sensor_ticks() const { return sensor_ticks_; }

  TopicBus& bus() { return *bus_; }

  /// Observers for logging. Called synchronously on the owning thread.
  std::function<void(std::uint64_t step, const Command&, const CommandResult&)> on_command;
  std::function<void(const SimSnapshot&)> on_sensor_tick;

 private:
  void respawn(Mode mode);
  void enter_navigation(const std::string& map_path);
  void rebuild_costmap();
  void physics_step();
  void sensor_tick();
  void publish_grid();
  void publish_costmap();
  void arbitrate();
  bool nav_active() const;

  Scenario scenario_;
  std::unique_ptr<TopicBus> bus_;
  std::shared_ptr<Subscription<TwistCommand>> twist_sub_;
  SimClock clock_;
  vehicle::WorldModel world_;
  std::vector<vehicle::Shape> added_;
  Mode mode_ = Mode::kMapping;
  vehicle::RigidBodyState truth_;
  control::Autopilot autopilot_;
  control::Twist teleop_;
  control::Twist nav_twist_;
  control::Twist twist_;
  bool crashed_ = false;
  std::string crash_reason_;
  bool in_contact_ = false;
  std::vector<CollisionEvent> collision_events_;

  std::uint64_t sensor_ticks_ = 0;
  std::optional<sensing::LaserScan> prev_scan_;
  geom::Transform2D last_sensor_delta_;
  geom::Pose2D odom_pose_;
  geom::TransformTree tf_;

  std::optional<mapping::SlamState> slam_;
  std::uint64_t grid_version_ = 0;

  std::optional<mapping::OccupancyGrid> static_map_;
  std::optional<nav::Costmap> costmap_;
  std::uint64_t costmap_version_ = 0;
  std::optional<localize::Amcl> amcl_;
  std::optional<nav::Navigator> navigator_;
  int last_plans_ = 0;

  Fnv1a hash_;
};

/// Per-scan noise seed derived from the scenario seed.
std::uint64_t scan_seed(std::uint64_t seed, std::uint64_t tick);

/// Marks every cell the shape touches as occupied.
void rasterize_shape(mapping::OccupancyGrid& grid, const vehicle::Shape& shape);

}  // namespace dronav::runtime
