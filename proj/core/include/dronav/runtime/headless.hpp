#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dronav/runtime/commands.hpp"
#include "dronav/runtime/scenario.hpp"
#include "dronav/runtime/sim.hpp"

namespace dronav::runtime {

namespace script {
struct Hold {
  double seconds = 0.0;
};
struct WaitHover {
  double timeout = 20.0;
};
/// Holds a teleop twist for `duration`, then sends zero.
struct Teleop {
  control::Twist twist;
  double duration = 0.0;
};
/// Scripted operator: turn toward the target on truth, then drive at teleop
/// speed; stops within `tolerance` and waits for the drone to settle.
struct FlyTo {
  geom::Vec2 target;
  double tolerance = 0.1;
  double timeout = 120.0;
};
struct Goal {
  geom::Pose2D pose;
  bool wait = true;
  double timeout = 120.0;
};
struct WaitGoal {
  double timeout = 120.0;
};
struct Send {
  Command command;
};
}  // namespace script

using ScriptStep =
    std::variant<script::Hold, script::WaitHover, script::Teleop, script::FlyTo, script::Goal, script::WaitGoal, script::Send>;

struct Script {
  double timeout = 600.0;  // sim seconds for the whole script
  std::vector<ScriptStep> steps;
};

/// Throws ValidationError naming steps[i].key for each problem. Relative
/// save_map and map_path entries are resolved against base_dir.
Script parse_script(const std::string& yaml_text, const std::string& base_dir = ".");
Script load_script(const std::string& path);

struct PoseError {
  double xy = 0.0;
  double yaw = 0.0;  // rad, absolute
};

struct MappingMetrics {
  double iou = 0.0;
  PoseError slam_error;
  PoseError odometry_error;
  int occupied_cells = 0;
  int truth_cells = 0;
};

struct LocalizationSample {
  double t = 0.0;
  PoseError error;
};

struct GoalOutcome {
  geom::Pose2D goal;
  std::string state;  // final NavState name, or TIMEOUT
  double duration = 0.0;
  PoseError error;  // truth vs goal at the end
  double path_cost = 0.0;
  int replans = 0;
  int collisions = 0;
};

struct MetricsReport {
  std::string scenario;
  std::uint64_t seed = 0;
  int commands = 0;
  double sim_time = 0.0;
  double wall_time = 0.0;
  std::optional<MappingMetrics> mapping;
  std::vector<LocalizationSample> localization;
  std::vector<GoalOutcome> goals;
  int goals_succeeded = 0;
  int collisions = 0;
  bool crashed = false;
  std::string crash_reason;
  bool timed_out = false;
  std::uint64_t hash = 0;

  nlohmann::json to_json() const;
};

class TimeoutError : public Error {
 public:
  TimeoutError(const std::string& what, MetricsReport partial) : Error(what), partial_(std::move(partial)) {}
  const MetricsReport& partial() const { return partial_; }

 private:
  MetricsReport partial_;
};

/// Truth occupancy for a grid: cells whose square holds both free and
/// non-free space, judged on a 10x10 sub-sample.
mapping::OccupancyGrid truth_occupancy(const vehicle::WorldModel& world, const mapping::GridGeometry& geo);

/// Intersection over union of occupied cells on a shared geometry.
double occupied_iou(const mapping::OccupancyGrid& est, const mapping::OccupancyGrid& truth);

/// Mapping quality of the current MAPPING phase. Null outside MAPPING.
std::optional<MappingMetrics> mapping_metrics(const Sim& sim);

/// Runs `script` on `sim` to completion. Throws TimeoutError with the
/// metrics gathered so far when a wait or the script budget runs out.
MetricsReport run_headless(Sim& sim, const Script& script);

/// Convenience: fresh Sim from the scenario.
MetricsReport run_headless(const Scenario& scenario, const Script& script);

}  // namespace dronav::runtime
