#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dronav/control/flight_controller.hpp"
#include "dronav/error.hpp"
#include "dronav/localize/filter.hpp"
#include "dronav/mapping/slam.hpp"
#include "dronav/nav/costmap.hpp"
#include "dronav/nav/navigator.hpp"
#include "dronav/sensing/lidar.hpp"
#include "dronav/vehicle/quadrotor.hpp"

namespace dronav::runtime {

/// Every problem found, one "key.path: reason" entry each.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems, const std::string& heading = "invalid scenario");
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class Mode : std::uint8_t { kMapping, kNavigation };

const char* to_string(Mode m);
std::optional<Mode> parse_mode(const std::string& s);

struct ClockParams {
  double physics_dt = 0.002;
  int control_div = 10;
  int sensor_div = 50;
};

struct TeleopParams {
  double v = 0.4;  // m/s
  double w = 1.0;  // rad/s
};

struct Scenario {
  std::string name = "unnamed";
  vehicle::WorldModel world;
  vehicle::VehicleParams vehicle;
  sensing::LidarSpec lidar;
  geom::Transform2D base_to_lidar;
  control::ControllerConfig controllers;
  mapping::SlamParams slam;
  localize::AmclParams amcl;
  nav::CostmapParams costmap;
  nav::NavigatorParams nav;
  TeleopParams teleop;
  ClockParams clock;
  geom::Pose2D start{1.0, 1.0, 0.0};
  std::uint64_t seed = 1;
  Mode mode = Mode::kMapping;
  std::optional<std::string> map_path;  // absolute, or relative to the working directory
  std::string source_text;              // YAML the scenario was parsed from
};

/// Problems with a fully-populated scenario; empty when valid.
std::vector<std::string> validate(const Scenario& s);

/// Parses YAML text. Relative map paths are resolved against `base_dir`.
/// Throws ValidationError listing every problem.
Scenario parse_scenario(const std::string& yaml_text, const std::string& base_dir = ".");

/// Reads and parses a scenario file. Missing files raise ValidationError too.
Scenario load_scenario(const std::string& path);

}  // namespace dronav::runtime
