#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dronav/runtime/map_io.hpp"
#include "dronav/runtime/scenario.hpp"
#include "dronav/runtime/sim.hpp"
#include "worlds.hpp"

namespace dronav::testing {

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string SampleScenarioText() { return ReadFile(std::string(DRONAV_SOURCE_DIR) + "/scenarios/sample_world.yaml"); }

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("dronav_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// Perfect map of the sample world: one-cell walls, obstacles rasterized.
inline std::string WriteSampleMap(const TempDir& dir) {
  mapping::OccupancyGrid g({0.05, 200, 200, {0.0, 0.0}}, mapping::CellState::kFree);
  for (int i = 0; i < 200; ++i) {
    g.set({i, 0}, mapping::CellState::kOccupied);
    g.set({i, 199}, mapping::CellState::kOccupied);
    g.set({0, i}, mapping::CellState::kOccupied);
    g.set({199, i}, mapping::CellState::kOccupied);
  }
  for (const auto& s : SampleWorld().obstacles) runtime::rasterize_shape(g, s);
  const std::string stem = dir / "sample_map";
  runtime::save_map(g, stem);
  return stem + ".yaml";
}

inline std::string NavScenarioText(const std::string& map_yaml) {
  std::string text = SampleScenarioText();
  const auto at = text.find("mode: MAPPING");
  text.replace(at, 13, "mode: NAVIGATION\nmap_path: " + map_yaml);
  return text;
}

}  // namespace dronav::testing
