#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dronav/error.hpp"
#include "dronav/mapping/grid.hpp"
#include "dronav/runtime/commands.hpp"

namespace dronav::runtime {

class Sim;

inline constexpr int kProtocolVersion = 1;

/// Malformed or unsupported message. what() always contains "parse".
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error("parse error: " + what) {}
};

nlohmann::json command_to_json(const Command& c);

/// Validates a decoded command object (v, type and fields).
Command command_from_json(const nlohmann::json& j);

struct DecodedCommand {
  Command command;
  std::optional<nlohmann::json> id;  // echoed in the ack
};

/// Text frame to command. Throws ProtocolError.
DecodedCommand decode_command(const std::string& text);

nlohmann::json ack_message(const Command& c, const CommandResult& r, const std::optional<nlohmann::json>& id);
nlohmann::json error_message(const std::string& message);

/// Grid cell values on the wire.
inline constexpr std::uint8_t kWireFree = 0;
inline constexpr std::uint8_t kWireOccupied = 100;
inline constexpr std::uint8_t kWireUnknown = 255;

std::vector<std::uint8_t> wire_values(const mapping::OccupancyGrid& grid);

/// Run-length delta encoder for one grid layer. The first message, and any
/// message after a geometry change, is a full frame.
class GridDeltaEncoder {
 public:
  explicit GridDeltaEncoder(std::string type) : type_(std::move(type)) {}

  /// Nothing to send when neither geometry nor any cell changed. Each sent
  /// message carries the next version of this encoder's stream.
  std::optional<nlohmann::json> encode(const mapping::GridGeometry& geo, const std::vector<std::uint8_t>& values);

 private:
  std::string type_;
  std::optional<mapping::GridGeometry> geo_;
  std::vector<std::uint8_t> values_;
  std::uint64_t version_ = 0;
};

/// Client-side grid state rebuilt from delta messages.
struct GridView {
  mapping::GridGeometry geometry{};
  std::vector<std::uint8_t> values;
  std::uint64_t version = 0;
};

/// Applies a grid_delta or costmap_delta. Throws ProtocolError when the
/// delta's base_version does not match the view.
void apply_grid_delta(GridView& view, const nlohmann::json& msg);

/// Builds the outgoing message set for one client at one publish instant.
class StateStreamer {
 public:
  std::vector<nlohmann::json> frame(const Sim& sim);

 private:
  GridDeltaEncoder grid_{"grid_delta"};
  GridDeltaEncoder costmap_{"costmap_delta"};
  std::uint64_t grid_version_ = ~0ULL;
  std::uint64_t costmap_version_ = ~0ULL;
  int plans_ = -1;
  std::string nav_key_;
};

}  // namespace dronav::runtime
