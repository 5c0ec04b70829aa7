#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "dronav/error.hpp"
#include "dronav/runtime/sim.hpp"

namespace dronav::runtime {

class BindError : public Error {
 public:
  using Error::Error;
};

struct ServeOptions {
  std::string bind = "127.0.0.1:8787";  // host:port, port 0 picks a free one
  double rate_hz = 20.0;                // state publish rate, capped at 20
  double realtime_factor = 1.0;         // sim seconds per wall second; <= 0 runs flat out
  std::size_t inbound_capacity = 256;   // commands waiting for the sim thread
  std::size_t outbound_capacity = 512;  // frames waiting per client, oldest dropped
  std::optional<double> max_sim_time;   // stop once sim time reaches this
  std::function<bool()> should_stop;    // polled once per control tick
  std::function<void(unsigned short port)> on_listening;
};

struct ServeStats {
  std::uint64_t connections = 0;
  std::uint64_t commands = 0;
  std::uint64_t parse_errors = 0;
  std::uint64_t inbound_dropped = 0;
  std::uint64_t outbound_dropped = 0;
};

/// WebSocket front end. The calling thread owns and advances the sim one
/// control tick at a time; networking runs on a separate thread and only
/// exchanges strings with it through bounded queues. Each client gets an
/// independent delta stream that starts with full frames. Malformed input
/// is answered with an error message on the same connection.
ServeStats serve(Sim& sim, const ServeOptions& options);

}  // namespace dronav::runtime
