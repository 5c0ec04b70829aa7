#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "dronav/runtime/headless.hpp"
#include "dronav/runtime/sim.hpp"

namespace dronav::runtime {

/// JSON-lines recorder: one header line, then one line per command and per
/// sensor tick, then an optional summary.
class RunLog {
 public:
  explicit RunLog(std::ostream& out) : out_(out) {}

  /// Writes the header and hooks the sim's observers.
  void attach(Sim& sim, const std::string& scenario_dir);
  void finish(const MetricsReport& report);

 private:
  void write(const nlohmann::json& j);

  std::ostream& out_;
  Sim* sim_ = nullptr;
};

struct ReplayResult {
  std::uint64_t ticks_checked = 0;
  std::uint64_t commands = 0;
  std::uint64_t mismatches = 0;
  std::optional<std::uint64_t> first_mismatch_step;
  std::uint64_t final_hash = 0;
  std::optional<std::uint64_t> logged_final_hash;
  bool ok() const { return mismatches == 0 && ticks_checked > 0; }
};

/// Re-runs a recorded log: rebuilds the scenario from the header, applies
/// commands at their recorded steps and compares every tick's state hash.
/// save_map commands are not re-executed. Throws FormatError on bad lines.
ReplayResult replay_log(std::istream& in, const std::string& file = "<log>");

}  // namespace dronav::runtime
