#include "dronav/runtime/headless.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dronav::runtime {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string resolve(const std::string& base_dir, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = fs::path(base_dir) / path;
  return path.lexically_normal().string();
}

// Field readers that log problems under `path` instead of throwing.
struct StepReader {
  const YAML::Node& node;
  std::string path;
  std::vector<std::string>& errs;

  double num(const char* key, std::optional<double> fallback = std::nullopt) const {
    const auto n = node[key];
    if (!n) {
      if (!fallback) errs.push_back(path + "." + key + ": required");
      return fallback.value_or(0.0);
    }
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      errs.push_back(path + "." + key + ": must be a number");
      return 0.0;
    }
  }
  double nonneg(const char* key, std::optional<double> fallback = std::nullopt) const {
    const double v = num(key, fallback);
    if (!(v >= 0.0)) errs.push_back(path + "." + key + ": must be >= 0");
    return v;
  }
  double positive(const char* key, std::optional<double> fallback = std::nullopt) const {
    const double v = num(key, fallback);
    if (!(v > 0.0)) errs.push_back(path + "." + key + ": must be > 0");
    return v;
  }
  std::string str(const char* key) const {
    const auto n = node[key];
    if (!n) {
      errs.push_back(path + "." + key + ": required");
      return {};
    }
    return n.as<std::string>();
  }
};

vehicle::Shape read_shape(const YAML::Node& n, const std::string& path, std::vector<std::string>& errs) {
  const StepReader r{n, path, errs};
  const auto type = n["type"] ? n["type"].as<std::string>() : "";
  auto pair = [&](const char* key) {
    const auto v = n[key];
    if (!v || !v.IsSequence() || v.size() != 2) {
      errs.push_back(path + "." + key + ": expected [x, y]");
      return std::array<double, 2>{};
    }
    return std::array<double, 2>{v[0].as<double>(), v[1].as<double>()};
  };
  if (type == "rect") {
    const auto lo = pair("min"), hi = pair("max");
    if (!(hi[0] > lo[0] && hi[1] > lo[1])) errs.push_back(path + ": max must exceed min");
    return vehicle::Rect{lo[0], lo[1], hi[0], hi[1]};
  }
  if (type == "circle") {
    const auto c = pair("center");
    const double rad = r.num("radius");
    if (!(rad > 0.0)) errs.push_back(path + ".radius: must be positive");
    return vehicle::Circle{{c[0], c[1]}, rad};
  }
  errs.push_back(path + ".type: expected rect or circle");
  return vehicle::Rect{};
}

double scalar(const YAML::Node& n, const std::string& path, std::vector<std::string>& errs) {
  try {
    const double v = n.as<double>();
    if (v >= 0.0) return v;
  } catch (const YAML::Exception&) {
  }
  errs.push_back(path + ": must be a number >= 0");
  return 0.0;
}

PoseError pose_error(const geom::Pose2D& a, const geom::Pose2D& b) {
  return {(a.position() - b.position()).norm(), std::abs(geom::angle_diff(a.theta, b.theta))};
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, h, 16);
  return std::string(buf, end);
}

json error_json(const PoseError& e) { return {{"xy", e.xy}, {"yaw", e.yaw}}; }

}  // namespace

Script parse_script(const std::string& yaml_text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError({"yaml: " + std::string(e.what())}, "invalid script");
  }
  Script s;
  std::vector<std::string> errs;
  if (!root || root.IsNull()) return s;
  if (!root.IsMap()) throw ValidationError({"script: expected a mapping with 'steps'"}, "invalid script");
  if (root["timeout"]) s.timeout = scalar(root["timeout"], "timeout", errs);
  const auto steps = root["steps"];
  if (steps && !steps.IsSequence()) errs.push_back("steps: expected a list");
  for (std::size_t i = 0; steps && steps.IsSequence() && i < steps.size(); ++i) {
    const std::string path = "steps[" + std::to_string(i) + "]";
    const auto item = steps[i];
    if (!item.IsMap() || item.size() != 1) {
      errs.push_back(path + ": expected a single-key mapping");
      continue;
    }
    const auto key = item.begin()->first.as<std::string>();
    const auto body = item.begin()->second;
    const std::string kp = path + "." + key;
    const StepReader r{body, kp, errs};
    if (key == "hold") {
      s.steps.push_back(script::Hold{body.IsScalar() ? scalar(body, kp, errs) : r.nonneg("seconds")});
    } else if (key == "wait_hover") {
      s.steps.push_back(script::WaitHover{body.IsMap() ? r.positive("timeout", 20.0) : 20.0});
    } else if (key == "teleop") {
      control::Twist t;
      t.linear.x = r.num("vx", 0.0);
      t.linear.y = r.num("vy", 0.0);
      t.angular.z = r.num("wz", 0.0);
      s.steps.push_back(script::Teleop{t, r.nonneg("duration")});
    } else if (key == "fly_to") {
      s.steps.push_back(script::FlyTo{{r.num("x"), r.num("y")}, r.positive("tolerance", 0.1), r.positive("timeout", 120.0)});
    } else if (key == "goal") {
      script::Goal g{{r.num("x"), r.num("y"), r.num("theta", 0.0)}, true, r.positive("timeout", 120.0)};
      if (body["wait"]) g.wait = body["wait"].as<bool>();
      s.steps.push_back(g);
    } else if (key == "wait_goal") {
      s.steps.push_back(script::WaitGoal{body.IsMap() ? r.positive("timeout", 120.0) : 120.0});
    } else if (key == "set_mode") {
      SetMode m;
      const auto name = body.IsScalar() ? body.as<std::string>() : r.str("mode");
      if (auto md = parse_mode(name)) m.mode = *md;
      else errs.push_back(kp + ": expected MAPPING or NAVIGATION");
      if (body.IsMap() && body["map_path"]) m.map_path = resolve(base_dir, body["map_path"].as<std::string>());
      s.steps.push_back(script::Send{m});
    } else if (key == "save_map") {
      s.steps.push_back(script::Send{SaveMap{resolve(base_dir, body.IsScalar() ? body.as<std::string>() : r.str("path"))}});
    } else if (key == "initial_pose") {
      SetInitialPose p{{r.num("x"), r.num("y"), r.num("theta", 0.0)}, std::nullopt};
      if (body["sigma"]) {
        const auto sg = body["sigma"];
        if (!sg.IsSequence() || sg.size() != 3) errs.push_back(kp + ".sigma: expected [sx, sy, stheta]");
        else p.sigma = std::array<double, 3>{sg[0].as<double>(), sg[1].as<double>(), sg[2].as<double>()};
      }
      s.steps.push_back(script::Send{p});
    } else if (key == "add_obstacle") {
      s.steps.push_back(script::Send{AddObstacle{read_shape(body, kp, errs)}});
    } else if (key == "reset") {
      s.steps.push_back(script::Send{Reset{}});
    } else if (key == "cancel_goal") {
      s.steps.push_back(script::Send{CancelGoal{}});
    } else {
      errs.push_back(path + ": unknown step '" + key + "'");
    }
  }
  if (!(s.timeout > 0.0)) errs.push_back("timeout: must be > 0");
  if (!errs.empty()) throw ValidationError(errs, "invalid script");
  return s;
}

Script load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"script: cannot open " + path}, "invalid script");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = fs::path(path).parent_path();
  return parse_script(ss.str(), dir.empty() ? "." : dir.string());
}

mapping::OccupancyGrid truth_occupancy(const vehicle::WorldModel& world, const mapping::GridGeometry& geo) {
  mapping::OccupancyGrid out(geo, mapping::CellState::kFree);
  constexpr int kSub = 10;
  for (int y = 0; y < geo.height; ++y)
    for (int x = 0; x < geo.width; ++x) {
      const double x0 = geo.origin.x + x * geo.resolution, y0 = geo.origin.y + y * geo.resolution;
      bool any_free = false, any_blocked = false;
      for (int j = 0; j < kSub && !(any_free && any_blocked); ++j)
        for (int i = 0; i < kSub; ++i) {
          const geom::Vec2 p{x0 + (i + 0.5) * geo.resolution / kSub, y0 + (j + 0.5) * geo.resolution / kSub};
          (world.is_free(p) ? any_free : any_blocked) = true;
        }
      if (any_free && any_blocked) out.set({x, y}, mapping::CellState::kOccupied);
    }
  return out;
}

double occupied_iou(const mapping::OccupancyGrid& est, const mapping::OccupancyGrid& truth) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < est.cells.size() && i < truth.cells.size(); ++i) {
    const bool a = est.cells[i] == mapping::CellState::kOccupied;
    const bool b = truth.cells[i] == mapping::CellState::kOccupied;
    inter += a && b;
    uni += a || b;
  }
  return uni ? double(inter) / double(uni) : 1.0;
}

std::optional<MappingMetrics> mapping_metrics(const Sim& sim) {
  const auto* slam = sim.slam();
  if (!slam) return std::nullopt;
  MappingMetrics m;
  const auto est = mapping::to_occupancy(slam->grid);
  const auto truth = truth_occupancy(sim.scenario().world, est.geometry);
  m.iou = occupied_iou(est, truth);
  m.occupied_cells = static_cast<int>(est.count(mapping::CellState::kOccupied));
  m.truth_cells = static_cast<int>(truth.count(mapping::CellState::kOccupied));
  const auto truth_pose = sim.truth_pose();
  m.slam_error = pose_error(slam->pose, truth_pose);
  const auto odom_only = geom::compose(sim.scenario().start, sim.odom_pose().as_transform());
  m.odometry_error = pose_error(odom_only, truth_pose);
  return m;
}

json MetricsReport::to_json() const {
  json j{{"scenario", scenario},
         {"seed", seed},
         {"commands", commands},
         {"sim_time", sim_time},
         {"wall_time", wall_time},
         {"collisions", collisions},
         {"crashed", crashed},
         {"crash_reason", crash_reason},
         {"timed_out", timed_out},
         {"goals_succeeded", goals_succeeded},
         {"hash", hash_hex(hash)}};
  if (mapping) {
    j["mapping"] = {{"iou", mapping->iou},
                    {"slam_error", error_json(mapping->slam_error)},
                    {"odometry_error", error_json(mapping->odometry_error)},
                    {"occupied_cells", mapping->occupied_cells},
                    {"truth_cells", mapping->truth_cells}};
  } else {
    j["mapping"] = nullptr;
  }
  json loc = json::array();
  for (const auto& s : localization) loc.push_back({s.t, s.error.xy, s.error.yaw});
  j["localization_error"] = std::move(loc);
  json goals_j = json::array();
  for (const auto& g : goals)
    goals_j.push_back({{"goal", {g.goal.x, g.goal.y, g.goal.theta}},
                       {"state", g.state},
                       {"duration", g.duration},
                       {"error", error_json(g.error)},
                       {"path_cost", g.path_cost},
                       {"replans", g.replans},
                       {"collisions", g.collisions}});
  j["goals"] = std::move(goals_j);
  return j;
}

namespace {

class Runner {
 public:
  Runner(Sim& sim, const Script& script) : sim_(sim), script_(script), start_time_(sim.clock().now()) {
    report_.scenario = sim.scenario().name;
    report_.seed = sim.scenario().seed;
    prev_tick_ = sim_.on_sensor_tick;
    sim_.on_sensor_tick = [this](const SimSnapshot& s) {
      if (prev_tick_) prev_tick_(s);
      const auto* amcl = sim_.amcl();
      if (amcl && amcl->initialized())
        report_.localization.push_back({s.time, pose_error(amcl->estimate().pose, sim_.truth_pose())});
    };
  }
  ~Runner() { sim_.on_sensor_tick = prev_tick_; }

  MetricsReport run() {
    wall_start_ = std::chrono::steady_clock::now();
    for (const auto& step : script_.steps) {
      std::visit(Overloaded{
                     [&](const script::Hold& h) { advance(h.seconds); },
                     [&](const script::WaitHover& w) { wait_hover(w.timeout); },
                     [&](const script::Teleop& t) {
                       send(TeleopTwist{t.twist});
                       advance(t.duration);
                       send(TeleopTwist{});
                     },
                     [&](const script::FlyTo& f) { fly_to(f); },
                     [&](const script::Goal& g) {
                       send(SetGoal{g.pose});
                       goal_started_ = sim_.clock().now();
                       goal_collisions_ = sim_.collisions();
                       if (g.wait) wait_goal(g.timeout);
                     },
                     [&](const script::WaitGoal& w) { wait_goal(w.timeout); },
                     [&](const script::Send& s) {
                       if (std::holds_alternative<SetMode>(s.command) || std::holds_alternative<Reset>(s.command))
                         capture_mapping();
                       const auto r = send(s.command);
                       if (!r.ok) throw Error(std::string(command_name(s.command)) + " failed: " + r.message);
                       if (std::holds_alternative<SaveMap>(s.command)) capture_mapping();
                     },
                 },
                 step);
      if (sim_.crashed()) break;
    }
    capture_mapping();
    return finish(false);
  }

 private:
  CommandResult send(const Command& c) {
    ++report_.commands;
    return sim_.apply(c);
  }

  void capture_mapping() {
    if (auto m = mapping_metrics(sim_)) report_.mapping = m;
  }

  MetricsReport finish(bool timed_out) {
    report_.timed_out = timed_out;
    report_.sim_time = sim_.clock().now() - start_time_;
    report_.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start_).count();
    report_.collisions = sim_.collisions();
    report_.crashed = sim_.crashed();
    report_.crash_reason = sim_.snapshot().crash_reason;
    report_.hash = sim_.hash();
    report_.goals_succeeded = 0;
    for (const auto& g : report_.goals) report_.goals_succeeded += g.state == "SUCCEEDED";
    return report_;
  }

  [[noreturn]] void timeout(const std::string& what) {
    capture_mapping();
    throw TimeoutError(what, finish(true));
  }

  void check_budget() {
    if (sim_.clock().now() - start_time_ > script_.timeout) timeout("script exceeded its timeout");
  }

  void advance(double seconds) {
    const double period = sim_.clock().sensor_period();
    double left = seconds;
    while (left > 1e-9 && !sim_.crashed()) {
      const double remaining = start_time_ + script_.timeout - sim_.clock().now();
      if (remaining <= 1e-9) timeout("script exceeded its timeout");
      const double chunk = std::min({period, left, remaining});
      sim_.run_for(chunk);
      left -= chunk;
    }
  }

  void wait_hover(double limit) {
    const double t0 = sim_.clock().now();
    while (!sim_.hovering() && !sim_.crashed()) {
      if (sim_.clock().now() - t0 > limit) timeout("drone did not reach hover");
      advance(sim_.clock().sensor_period());
    }
  }

  void fly_to(const script::FlyTo& f) {
    const auto& tp = sim_.scenario().teleop;
    const double t0 = sim_.clock().now();
    while (!sim_.crashed()) {
      if (sim_.clock().now() - t0 > f.timeout) timeout("fly_to did not arrive");
      const auto pose = sim_.truth_pose();
      const geom::Vec2 d = f.target - pose.position();
      const double dist = d.norm();
      if (dist < f.tolerance) break;
      const double err = geom::angle_diff(std::atan2(d.y, d.x), pose.theta);
      const double w = std::clamp(2.0 * err, -tp.w, tp.w);
      const double v = std::abs(err) > 0.15 ? 0.0 : std::min(tp.v, std::max(0.1, 0.8 * dist));
      send(TeleopTwist{control::Twist::planar(v, w)});
      advance(sim_.clock().sensor_period());
    }
    send(TeleopTwist{});
    while (!sim_.crashed()) {
      const auto& v = sim_.truth().velocity;
      if (std::hypot(v.x, v.y) < 0.05 && std::abs(sim_.truth().body_rates.z) < 0.05) break;
      if (sim_.clock().now() - t0 > f.timeout) timeout("fly_to did not settle");
      advance(sim_.clock().sensor_period());
    }
  }

  void wait_goal(double limit) {
    const auto* nav = sim_.navigator();
    if (!nav || !nav->status().active_goal) throw Error("wait_goal: no active goal");
    const double t0 = sim_.clock().now();
    auto done = [&] {
      const auto s = nav->status().state;
      return s == nav::NavState::kSucceeded || s == nav::NavState::kFailed;
    };
    while (!done() && !sim_.crashed() && sim_.clock().now() - t0 <= limit) advance(sim_.clock().sensor_period());
    GoalOutcome g;
    g.goal = *nav->status().active_goal;
    g.state = done() ? nav::to_string(nav->status().state) : (sim_.crashed() ? "CRASHED" : "TIMEOUT");
    g.duration = sim_.clock().now() - goal_started_;
    g.error = pose_error(sim_.truth_pose(), g.goal);
    g.path_cost = nav->path().cost;
    g.replans = nav->replans();
    g.collisions = sim_.collisions() - goal_collisions_;
    report_.goals.push_back(g);
    if (!done() && !sim_.crashed()) send(CancelGoal{});
  }

  Sim& sim_;
  const Script& script_;
  double start_time_;
  MetricsReport report_;
  std::function<void(const SimSnapshot&)> prev_tick_;
  std::chrono::steady_clock::time_point wall_start_;
  double goal_started_ = 0.0;
  int goal_collisions_ = 0;
};

}  // namespace

MetricsReport run_headless(Sim& sim, const Script& script) { return Runner(sim, script).run(); }

MetricsReport run_headless(const Scenario& scenario, const Script& script) {
  Sim sim(scenario);
  return run_headless(sim, script);
}

}  // namespace dronav::runtime
