#pragma once

#include <cstdint>

namespace dronav::runtime {

/// Fixed-step clock. Time is derived from the step count, so it never drifts.
struct SimClock {
  double physics_dt = 0.002;
  int control_div = 10;  // 50 Hz outer loop
  int sensor_div = 50;   // 10 Hz lidar
  std::uint64_t steps = 0;

  double now() const { return static_cast<double>(steps) * physics_dt; }
  /// True when the step about to run (index `steps`) is a control tick.
  bool control_tick() const { return steps % static_cast<std::uint64_t>(control_div) == 0; }
  /// Sensor ticks fire at the end of every sensor_div-th step.
  bool sensor_tick_after() const { return (steps + 1) % static_cast<std::uint64_t>(sensor_div) == 0; }
  void advance() { ++steps; }
  double sensor_period() const { return physics_dt * sensor_div; }
  double control_period() const { return physics_dt * control_div; }
};

/// 64-bit FNV-1a over raw bytes.
class Fnv1a {
 public:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= kPrime;
    }
  }
  void add(double v) { bytes(&v, sizeof v); }
  void add(std::uint64_t v) { bytes(&v, sizeof v); }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = kOffset;
};

}  // namespace dronav::runtime
