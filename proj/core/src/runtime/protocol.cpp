#include "dronav/runtime/protocol.hpp"

#include <cstdio>

#include "dronav/runtime/sim.hpp"

namespace dronav::runtime {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

json vec3(const vehicle::Vec3& v) { return {{"x", v.x}, {"y", v.y}, {"z", v.z}}; }

json pose_json(const geom::Pose2D& p) { return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}}; }

json shape_json(const vehicle::Shape& s) {
  if (const auto* r = std::get_if<vehicle::Rect>(&s))
    return {{"type", "rect"}, {"min", {r->min_x, r->min_y}}, {"max", {r->max_x, r->max_y}}};
  const auto& c = std::get<vehicle::Circle>(s);
  return {{"type", "circle"}, {"center", {c.center.x, c.center.y}}, {"radius", c.radius}};
}

double number(const json& j, const char* key) {
  if (!j.contains(key)) throw ProtocolError(std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ProtocolError(std::string("field '") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ProtocolError(std::string("field '") + key + "' must be finite");
  return d;
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

vehicle::Vec3 read_vec3(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (!v.is_object()) throw ProtocolError(std::string("field '") + key + "' must be an object");
  return {number_or(v, "x", 0.0), number_or(v, "y", 0.0), number_or(v, "z", 0.0)};
}

std::array<double, 2> pair(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 2)
    throw ProtocolError(std::string("field '") + key + "' must be [x, y]");
  const auto& a = j.at(key);
  if (!a[0].is_number() || !a[1].is_number()) throw ProtocolError(std::string("field '") + key + "' must hold numbers");
  return {a[0].get<double>(), a[1].get<double>()};
}

std::string text(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) throw ProtocolError(std::string("field '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

json command_to_json(const Command& c) {
  json j = std::visit(
      Overloaded{
          [](const TeleopTwist& t) -> json {
            return {{"linear", vec3(t.twist.linear)}, {"angular", vec3(t.twist.angular)}};
          },
          [](const SetGoal& g) -> json { return pose_json(g.goal); },
          [](const CancelGoal&) -> json { return json::object(); },
          [](const SetInitialPose& p) -> json {
            json o = pose_json(p.pose);
            if (p.sigma) o["sigma"] = *p.sigma;
            return o;
          },
          [](const SetMode& m) -> json {
            json o{{"mode", to_string(m.mode)}};
            if (m.map_path) o["map_path"] = *m.map_path;
            return o;
          },
          [](const SaveMap& s) -> json { return {{"path", s.path}}; },
          [](const Reset&) -> json { return json::object(); },
          [](const AddObstacle& a) -> json { return {{"shape", shape_json(a.shape)}}; },
      },
      c);
  j["v"] = kProtocolVersion;
  j["type"] = command_name(c);
  return j;
}

Command command_from_json(const json& j) {
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  if (!j.contains("v") || !j.at("v").is_number_integer()) throw ProtocolError("missing integer field 'v'");
  if (j.at("v").get<int>() != kProtocolVersion)
    throw ProtocolError("unsupported protocol version " + j.at("v").dump());
  const std::string type = text(j, "type");
  if (type == "teleop_twist") return TeleopTwist{{read_vec3(j, "linear"), read_vec3(j, "angular")}};
  if (type == "set_goal") return SetGoal{{number(j, "x"), number(j, "y"), number(j, "theta")}};
  if (type == "cancel_goal") return CancelGoal{};
  if (type == "set_initial_pose") {
    SetInitialPose p{{number(j, "x"), number(j, "y"), number(j, "theta")}, std::nullopt};
    if (j.contains("sigma")) {
      const auto& s = j.at("sigma");
      if (!s.is_array() || s.size() != 3) throw ProtocolError("field 'sigma' must be [sx, sy, stheta]");
      std::array<double, 3> sig{};
      for (int i = 0; i < 3; ++i) {
        if (!s[i].is_number() || !(s[i].get<double>() > 0.0)) throw ProtocolError("sigma entries must be positive numbers");
        sig[i] = s[i].get<double>();
      }
      p.sigma = sig;
    }
    return p;
  }
  if (type == "set_mode") {
    const auto m = parse_mode(text(j, "mode"));
    if (!m) throw ProtocolError("field 'mode' must be MAPPING or NAVIGATION");
    SetMode s{*m, std::nullopt};
    if (j.contains("map_path")) s.map_path = text(j, "map_path");
    return s;
  }
  if (type == "save_map") return SaveMap{text(j, "path")};
  if (type == "reset") return Reset{};
  if (type == "add_obstacle") {
    if (!j.contains("shape") || !j.at("shape").is_object()) throw ProtocolError("field 'shape' must be an object");
    const auto& s = j.at("shape");
    const auto kind = text(s, "type");
    if (kind == "rect") {
      const auto lo = pair(s, "min"), hi = pair(s, "max");
      if (!(hi[0] > lo[0] && hi[1] > lo[1])) throw ProtocolError("rect max must exceed min");
      return AddObstacle{vehicle::Rect{lo[0], lo[1], hi[0], hi[1]}};
    }
    if (kind == "circle") {
      const auto c = pair(s, "center");
      const double r = number(s, "radius");
      if (!(r > 0.0)) throw ProtocolError("circle radius must be positive");
      return AddObstacle{vehicle::Circle{{c[0], c[1]}, r}};
    }
    throw ProtocolError("shape type must be rect or circle");
  }
  throw ProtocolError("unknown command type '" + type + "'");
}

DecodedCommand decode_command(const std::string& frame) {
  json j;
  try {
    j = json::parse(frame);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("invalid JSON: ") + e.what());
  }
  DecodedCommand d{command_from_json(j), std::nullopt};
  if (j.contains("id")) d.id = j.at("id");
  return d;
}

json ack_message(const Command& c, const CommandResult& r, const std::optional<json>& id) {
  json j{{"v", kProtocolVersion}, {"type", "ack"}, {"command", command_name(c)}, {"ok", r.ok}, {"message", r.message}};
  if (id) j["id"] = *id;
  return j;
}

json error_message(const std::string& message) {
  return {{"v", kProtocolVersion}, {"type", "error"}, {"message", message}};
}

std::vector<std::uint8_t> wire_values(const mapping::OccupancyGrid& grid) {
  std::vector<std::uint8_t> out(grid.cells.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (grid.cells[i]) {
      case mapping::CellState::kFree: out[i] = kWireFree; break;
      case mapping::CellState::kOccupied: out[i] = kWireOccupied; break;
      case mapping::CellState::kUnknown: out[i] = kWireUnknown; break;
    }
  }
  return out;
}

std::optional<json> GridDeltaEncoder::encode(const mapping::GridGeometry& geo, const std::vector<std::uint8_t>& values) {
  const bool full = !geo_ || geo_->width != geo.width || geo_->height != geo.height ||
                    geo_->resolution != geo.resolution || !(geo_->origin == geo.origin);
  json runs = json::array();
  std::size_t i = 0;
  const std::size_t n = values.size();
  while (i < n) {
    if (!full && values[i] == values_[i]) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < n && values[j] == values[i] && (full || values[j] != values_[j])) ++j;
    runs.push_back({i, j - i, values[i]});
    i = j;
  }
  if (!full && runs.empty()) return std::nullopt;
  const std::uint64_t version = version_ + 1;
  json msg{{"v", kProtocolVersion},
           {"type", type_},
           {"version", version},
           {"base_version", full ? 0 : version_},
           {"full", full},
           {"width", geo.width},
           {"height", geo.height},
           {"resolution", geo.resolution},
           {"origin", {geo.origin.x, geo.origin.y}},
           {"runs", std::move(runs)}};
  geo_ = geo;
  values_ = values;
  version_ = version;
  return msg;
}

void apply_grid_delta(GridView& view, const json& msg) {
  try {
    const bool full = msg.at("full").get<bool>();
    if (!full && msg.at("base_version").get<std::uint64_t>() != view.version)
      throw ProtocolError("grid delta base_version " + msg.at("base_version").dump() + " does not match view version " +
                          std::to_string(view.version));
    if (full) {
      view.geometry.width = msg.at("width").get<int>();
      view.geometry.height = msg.at("height").get<int>();
      view.geometry.resolution = msg.at("resolution").get<double>();
      view.geometry.origin = {msg.at("origin")[0].get<double>(), msg.at("origin")[1].get<double>()};
      view.values.assign(view.geometry.size(), kWireUnknown);
    }
    for (const auto& r : msg.at("runs")) {
      const auto start = r[0].get<std::size_t>(), count = r[1].get<std::size_t>();
      const auto value = r[2].get<std::uint8_t>();
      if (start + count > view.values.size()) throw ProtocolError("grid delta run out of range");
      std::fill_n(view.values.begin() + static_cast<std::ptrdiff_t>(start), count, value);
    }
    view.version = msg.at("version").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad grid delta: ") + e.what());
  }
}

std::vector<json> StateStreamer::frame(const Sim& sim) {
  std::vector<json> out;
  const auto snap = sim.snapshot();
  const double t = snap.time;
  json est = nullptr;
  if (snap.estimate) est = pose_json(*snap.estimate);
  out.push_back({{"v", kProtocolVersion},
                 {"type", "snapshot"},
                 {"t", t},
                 {"mode", to_string(snap.mode)},
                 {"phase", snap.phase == control::TakeoffPhase::kHold ? "HOLD" : "CLIMB"},
                 {"truth",
                  {{"x", snap.truth.position.x},
                   {"y", snap.truth.position.y},
                   {"z", snap.truth.position.z},
                   {"yaw", snap.truth.attitude.z},
                   {"vx", snap.truth.velocity.x},
                   {"vy", snap.truth.velocity.y}}},
                 {"estimate", est},
                 {"twist", {{"linear", vec3(snap.twist.linear)}, {"angular", vec3(snap.twist.angular)}}},
                 {"collisions", snap.collisions},
                 {"crashed", snap.crashed},
                 {"hash", hex(snap.hash)}});

  if (const auto* slam = sim.slam(); slam && sim.grid_version() != grid_version_) {
    grid_version_ = sim.grid_version();
    const auto occ = mapping::to_occupancy(slam->grid);
    if (auto m = grid_.encode(occ.geometry, wire_values(occ))) out.push_back(std::move(*m));
  }
  if (const auto* map = sim.static_map(); map && sim.costmap_version() != costmap_version_) {
    if (auto m = grid_.encode(map->geometry, wire_values(*map))) out.push_back(std::move(*m));
    costmap_version_ = sim.costmap_version();
    const auto* cm = sim.costmap();
    std::vector<std::uint8_t> cost(cm->geometry().size());
    for (int y = 0; y < cm->geometry().height; ++y)
      for (int x = 0; x < cm->geometry().width; ++x) cost[cm->geometry().index({x, y})] = cm->cost({x, y});
    if (auto m = costmap_.encode(cm->geometry(), cost)) out.push_back(std::move(*m));
  }
  if (const auto* amcl = sim.amcl(); amcl && amcl->initialized()) {
    const auto& ps = amcl->particles().particles;
    const std::size_t stride = std::max<std::size_t>(1, ps.size() / 500);
    json poses = json::array();
    for (std::size_t i = 0; i < ps.size(); i += stride)
      poses.push_back({ps[i].pose.x, ps[i].pose.y, ps[i].pose.theta, ps[i].weight});
    out.push_back({{"v", kProtocolVersion}, {"type", "particles"}, {"t", t}, {"poses", std::move(poses)}});
  }
  if (const auto* nav = sim.navigator()) {
    if (nav->plans() != plans_) {
      plans_ = nav->plans();
      json wps = json::array();
      for (const auto& w : nav->path().waypoints) wps.push_back({w.x, w.y, w.theta});
      out.push_back({{"v", kProtocolVersion}, {"type", "path"}, {"t", t}, {"waypoints", std::move(wps)},
                     {"cost", nav->path().cost}});
    }
    const auto& st = nav->status();
    json goal = nullptr;
    if (st.active_goal) goal = pose_json(*st.active_goal);
    json ns{{"v", kProtocolVersion}, {"type", "nav_status"}, {"state", nav::to_string(st.state)},
            {"goal", goal}, {"diagnostics", st.diagnostics}, {"replans", nav->replans()}};
    const auto key = ns.dump();
    if (key != nav_key_) {
      nav_key_ = key;
      ns["t"] = t;
      out.push_back(std::move(ns));
    }
  }
  if (const auto* scan = sim.last_scan()) {
    json ranges = json::array();
    for (double r : scan->ranges) ranges.push_back(sensing::LaserScan::is_return(r) ? json(r) : json(nullptr));
    out.push_back({{"v", kProtocolVersion}, {"type", "scan"}, {"t", scan->stamp}, {"frame", scan->frame},
                   {"angle_min", scan->spec.angle_min}, {"angle_increment", scan->spec.angle_increment()},
                   {"ranges", std::move(ranges)}});
  }
  json edges = json::array();
  for (const auto& e : sim.tf().edges())
    edges.push_back({{"parent", e.parent}, {"child", e.child}, {"x", e.transform.translation.x},
                     {"y", e.transform.translation.y}, {"theta", e.transform.rotation}, {"stamp", e.stamp}});
  out.push_back({{"v", kProtocolVersion}, {"type", "tf"}, {"t", t}, {"edges", std::move(edges)}});
  return out;
}

}  // namespace dronav::runtime
