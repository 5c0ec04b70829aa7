#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>

#include "dronav/control/flight_controller.hpp"
#include "dronav/geom/transform.hpp"
#include "dronav/runtime/scenario.hpp"
#include "dronav/vehicle/world.hpp"

namespace dronav::runtime {

struct TeleopTwist {
  control::Twist twist;
};
struct SetGoal {
  geom::Pose2D goal;
};
struct CancelGoal {};
struct SetInitialPose {
  geom::Pose2D pose;
  std::optional<std::array<double, 3>> sigma;  // scenario default when absent
};
struct SetMode {
  Mode mode = Mode::kMapping;
  std::optional<std::string> map_path;  // overrides the scenario's
};
struct SaveMap {
  std::string path;
};
struct Reset {};
struct AddObstacle {
  vehicle::Shape shape;
};

using Command = std::variant<TeleopTwist, SetGoal, CancelGoal, SetInitialPose, SetMode, SaveMap, Reset, AddObstacle>;

const char* command_name(const Command& c);

struct CommandResult {
  bool ok = true;
  std::string message;
};

}  // namespace dronav::runtime
