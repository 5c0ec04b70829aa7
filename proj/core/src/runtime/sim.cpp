#include "dronav/runtime/sim.hpp"

#include <cmath>

#include "dronav/runtime/map_io.hpp"
#include "dronav/sensing/laser_odometry.hpp"

namespace dronav::runtime {

using geom::Pose2D;
using geom::Transform2D;

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

const char* command_name(const Command& c) {
  return std::visit(Overloaded{
                        [](const TeleopTwist&) { return "teleop_twist"; },
                        [](const SetGoal&) { return "set_goal"; },
                        [](const CancelGoal&) { return "cancel_goal"; },
                        [](const SetInitialPose&) { return "set_initial_pose"; },
                        [](const SetMode&) { return "set_mode"; },
                        [](const SaveMap&) { return "save_map"; },
                        [](const Reset&) { return "reset"; },
                        [](const AddObstacle&) { return "add_obstacle"; },
                    },
                    c);
}

std::uint64_t scan_seed(std::uint64_t seed, std::uint64_t tick) { return splitmix(seed ^ splitmix(tick)); }

void rasterize_shape(mapping::OccupancyGrid& grid, const vehicle::Shape& shape) {
  const auto& g = grid.geometry;
  const double half = 0.5 * g.resolution;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const auto c = g.center_of({x, y});
      // Cell square against the shape: rectangles by overlap, circles by
      // distance to the closest point of the square.
      bool hit = false;
      if (const auto* r = std::get_if<vehicle::Rect>(&shape)) {
        hit = c.x + half >= r->min_x && c.x - half <= r->max_x && c.y + half >= r->min_y && c.y - half <= r->max_y;
      } else {
        const auto& ci = std::get<vehicle::Circle>(shape);
        const double qx = std::clamp(ci.center.x, c.x - half, c.x + half);
        const double qy = std::clamp(ci.center.y, c.y - half, c.y + half);
        hit = std::hypot(qx - ci.center.x, qy - ci.center.y) <= ci.radius;
      }
      if (hit) grid.set({x, y}, mapping::CellState::kOccupied);
    }
}

Sim::Sim(Scenario scenario)
    : scenario_(std::move(scenario)),
      bus_(std::make_unique<TopicBus>()),
      autopilot_(scenario_.controllers, scenario_.vehicle, scenario_.clock.physics_dt, scenario_.clock.control_div) {
  clock_.physics_dt = scenario_.clock.physics_dt;
  clock_.control_div = scenario_.clock.control_div;
  clock_.sensor_div = scenario_.clock.sensor_div;
  twist_sub_ = bus_->twist_cmd.subscribe(64);
  bus_->scan.claim("lidar");
  bus_->truth_state.claim("sim");
  bus_->slam_pose.claim("slam");
  bus_->amcl_pose.claim("amcl");
  bus_->grid_snapshot.claim("slam");
  bus_->costmap_snapshot.claim("costmap");
  bus_->path.claim("nav");
  bus_->nav_status.claim("nav");
  bus_->transform_updates.claim("tf");
  bus_->twist_cmd.claim("teleop");
  bus_->twist_cmd.claim("nav");
  world_ = scenario_.world;
  if (scenario_.mode == Mode::kNavigation) enter_navigation(*scenario_.map_path);
  respawn(scenario_.mode);
}

Pose2D Sim::truth_pose() const { return {truth_.position.x, truth_.position.y, truth_.attitude.z}; }

void Sim::respawn(Mode mode) {
  mode_ = mode;
  truth_ = {};
  truth_.position = {scenario_.start.x, scenario_.start.y, 0.0};
  truth_.attitude.z = scenario_.start.theta;
  truth_.time = clock_.now();
  autopilot_.reset();
  teleop_ = nav_twist_ = twist_ = {};
  while (twist_sub_->poll()) {
  }
  in_contact_ = false;
  prev_scan_.reset();
  last_sensor_delta_ = {};
  odom_pose_ = {};
  tf_ = {};
  tf_.set(geom::frames::kBase, geom::frames::kLidar, scenario_.base_to_lidar, clock_.now());
  if (mode == Mode::kMapping) {
    auto params = scenario_.slam;
    params.base_to_lidar = scenario_.base_to_lidar;
    slam_ = mapping::make_slam_state(params, scenario_.start);
    ++grid_version_;
    amcl_.reset();
    navigator_.reset();
    costmap_.reset();
    static_map_.reset();
  } else {
    slam_.reset();
    amcl_.emplace(scenario_.amcl, localize::LikelihoodField(*static_map_, scenario_.amcl.field_max_distance),
                  scenario_.base_to_lidar, splitmix(scenario_.seed ^ 0xa3c1ULL));
    navigator_.emplace(scenario_.nav);
    last_plans_ = 0;
    rebuild_costmap();
  }
}

void Sim::enter_navigation(const std::string& map_path) {
  static_map_ = load_map(map_path).grid;
}

void Sim::rebuild_costmap() {
  auto occ = *static_map_;
  for (const auto& s : added_) rasterize_shape(occ, s);
  costmap_ = nav::build_costmap(occ, scenario_.costmap);
  ++costmap_version_;
  publish_costmap();
}

void Sim::publish_costmap() {
  auto snap = std::make_shared<CostmapSnapshot>();
  snap->stamp = clock_.now();
  snap->version = costmap_version_;
  snap->geometry = costmap_->geometry();
  snap->cost.resize(snap->geometry.size());
  for (int y = 0; y < snap->geometry.height; ++y)
    for (int x = 0; x < snap->geometry.width; ++x)
      snap->cost[snap->geometry.index({x, y})] = costmap_->cost({x, y});
  bus_->costmap_snapshot.publish(std::move(snap));
}

void Sim::publish_grid() {
  auto snap = std::make_shared<GridSnapshot>();
  snap->stamp = clock_.now();
  snap->version = grid_version_;
  snap->grid = mapping::to_occupancy(slam_->grid);
  bus_->grid_snapshot.publish(std::move(snap));
}

std::optional<Pose2D> Sim::estimate() const {
  if (slam_ && slam_->initialized) return slam_->pose;
  if (amcl_ && amcl_->initialized()) return amcl_->estimate().pose;
  return std::nullopt;
}

bool Sim::nav_active() const {
  if (!navigator_) return false;
  const auto s = navigator_->status().state;
  return s == nav::NavState::kPlanning || s == nav::NavState::kFollowing || s == nav::NavState::kRecovering;
}

void Sim::arbitrate() {
  while (auto m = twist_sub_->poll()) {
    if (m->source == TwistSource::kTeleop) teleop_ = m->twist;
    else nav_twist_ = m->twist;
  }
  // Single arbiter: nav output never drives in MAPPING, teleop never drives
  // while a navigation goal is active.
  if (mode_ == Mode::kMapping) twist_ = teleop_;
  else twist_ = nav_active() ? nav_twist_ : teleop_;
}

void Sim::physics_step() {
  if (clock_.control_tick()) arbitrate();
  const auto rotors = autopilot_.step(truth_, twist_);
  try {
    truth_ = vehicle::step_dynamics(truth_, rotors, scenario_.vehicle, clock_.physics_dt);
  } catch (const vehicle::CrashError& e) {
    crashed_ = true;
    crash_reason_ = e.what();
    return;
  }
  const auto report = vehicle::check_collision(truth_, world_, scenario_.vehicle);
  const bool contact = report.contact || report.out_of_bounds;
  if (contact && !in_contact_)
    collision_events_.push_back({clock_.now() + clock_.physics_dt, {truth_.position.x, truth_.position.y},
                                 report.shape_id, report.out_of_bounds});
  in_contact_ = contact;
  for (double v : {truth_.position.x, truth_.position.y, truth_.position.z, truth_.velocity.x, truth_.velocity.y,
                   truth_.velocity.z, truth_.attitude.x, truth_.attitude.y, truth_.attitude.z})
    hash_.add(v);
  const bool sensor = clock_.sensor_tick_after();
  clock_.advance();
  if (sensor) sensor_tick();
}

void Sim::sensor_tick() {
  const double now = clock_.now();
  ++sensor_ticks_;
  bus_->truth_state.publish(truth_);
  const Pose2D base = truth_pose();
  const auto lidar_pose = geom::compose(base, scenario_.base_to_lidar);
  auto scan = sensing::raycast_scan(world_, lidar_pose, scenario_.lidar, scan_seed(scenario_.seed, sensor_ticks_), now);
  bus_->scan.publish(scan);
  for (double r : scan.ranges) hash_.add(r);

  std::optional<Transform2D> base_delta;
  if (prev_scan_) {
    try {
      const auto od = sensing::laser_odometry(*prev_scan_, scan, last_sensor_delta_);
      last_sensor_delta_ = od.delta;
      base_delta = sensing::sensor_delta_to_base(od.delta, scenario_.base_to_lidar);
    } catch (const sensing::DegenerateScanError&) {
      last_sensor_delta_ = {};
    }
  }
  prev_scan_ = scan;
  if (base_delta) odom_pose_ = geom::compose(odom_pose_, *base_delta);

  if (mode_ == Mode::kMapping) {
    const auto r = mapping::slam_tick(*slam_, base_delta, scan);
    if (r.status != mapping::SlamStatus::kSkipped) ++grid_version_;
    bus_->slam_pose.publish({now, r.map_pose});
    if (sensor_ticks_ % 5 == 0) publish_grid();
  } else {
    amcl_->on_scan(base_delta.value_or(Transform2D{}), scan);
    if (amcl_->initialized()) {
      auto parts = std::make_shared<std::vector<localize::Particle>>(amcl_->particles().particles);
      bus_->amcl_pose.publish({now, amcl_->estimate(), std::move(parts)});
    }
    nav::NavOutput out;
    if (amcl_->initialized() && hovering() && navigator_->status().state != nav::NavState::kIdle) {
      const double period = clock_.sensor_period();
      out = navigator_->tick(amcl_->estimate().pose, *costmap_, period);
      bus_->twist_cmd.publish({TwistSource::kNav, out.twist, now});
    }
    if (navigator_->plans() != last_plans_) {
      last_plans_ = navigator_->plans();
      auto path = std::make_shared<PathMsg>();
      path->stamp = now;
      path->waypoints = navigator_->path().waypoints;
      path->cost = navigator_->path().cost;
      bus_->path.publish(std::move(path));
    }
    bus_->nav_status.publish({now, navigator_->status(), navigator_->replans()});
    hash_.add(out.twist.linear.x);
    hash_.add(out.twist.angular.z);
  }

  if (const auto est = estimate()) {
    hash_.add(est->x);
    hash_.add(est->y);
    hash_.add(est->theta);
    const auto map_to_odom = geom::compose(est->as_transform(), geom::invert(odom_pose_.as_transform()));
    tf_.set(geom::frames::kMap, geom::frames::kOdom, map_to_odom, now);
  }
  tf_.set(geom::frames::kOdom, geom::frames::kBase, odom_pose_.as_transform(), now);
  bus_->transform_updates.publish({now, tf_.edges()});
  if (on_sensor_tick) on_sensor_tick(snapshot());
}

SimSnapshot Sim::step(std::uint64_t n) {
  for (std::uint64_t i = 0; i < n && !crashed_; ++i) physics_step();
  return snapshot();
}

SimSnapshot Sim::run_for(double seconds) {
  const auto n = static_cast<std::uint64_t>(std::llround(seconds / clock_.physics_dt));
  return step(n);
}

SimSnapshot Sim::snapshot() const {
  SimSnapshot s;
  s.time = clock_.now();
  s.steps = clock_.steps;
  s.sensor_ticks = sensor_ticks_;
  s.mode = mode_;
  s.truth = truth_;
  s.phase = autopilot_.phase();
  s.estimate = estimate();
  if (navigator_) s.nav = navigator_->status();
  s.twist = twist_;
  s.collisions = collisions();
  s.in_contact = in_contact_;
  s.crashed = crashed_;
  s.crash_reason = crash_reason_;
  s.hash = hash_.value();
  return s;
}

CommandResult Sim::apply(const Command& cmd) {
  CommandResult res = std::visit(
      Overloaded{
          [&](const TeleopTwist& c) -> CommandResult {
            if (!c.twist.is_finite()) return {false, "teleop_twist: non-finite values"};
            bus_->twist_cmd.publish({TwistSource::kTeleop, c.twist, clock_.now()});
            if (mode_ == Mode::kNavigation && nav_active()) return {true, "ignored while navigating"};
            return {};
          },
          [&](const SetGoal& c) -> CommandResult {
            if (mode_ != Mode::kNavigation) return {false, "set_goal: requires NAVIGATION mode"};
            navigator_->set_goal(c.goal);
            bus_->nav_status.publish({clock_.now(), navigator_->status(), navigator_->replans()});
            return {};
          },
          [&](const CancelGoal&) -> CommandResult {
            if (!navigator_) return {false, "cancel_goal: requires NAVIGATION mode"};
            navigator_->cancel();
            return {};
          },
          [&](const SetInitialPose& c) -> CommandResult {
            if (mode_ != Mode::kNavigation) return {false, "set_initial_pose: requires NAVIGATION mode"};
            if (c.sigma) amcl_->initialize(c.pose, *c.sigma);
            else amcl_->initialize(c.pose);
            return {};
          },
          [&](const SetMode& c) -> CommandResult {
            if (c.mode == Mode::kNavigation) {
              const auto path = c.map_path ? c.map_path : scenario_.map_path;
              if (!path) return {false, "ValidationError: map_path: required in NAVIGATION mode"};
              try {
                enter_navigation(*path);
              } catch (const Error& e) {
                return {false, std::string("set_mode: ") + e.what()};
              }
              scenario_.map_path = path;
            }
            respawn(c.mode);
            return {};
          },
          [&](const SaveMap& c) -> CommandResult {
            if (!slam_) return {false, "save_map: no SLAM map outside MAPPING mode"};
            try {
              return {true, save_map(slam_->grid, c.path)};
            } catch (const Error& e) {
              return {false, std::string("save_map: ") + e.what()};
            }
          },
          [&](const Reset&) -> CommandResult {
            added_.clear();
            world_ = scenario_.world;
            respawn(mode_);
            return {};
          },
          [&](const AddObstacle& c) -> CommandResult {
            added_.push_back(c.shape);
            world_.obstacles.push_back(c.shape);
            if (static_map_) rebuild_costmap();
            return {};
          },
      },
      cmd);
  if (on_command) on_command(clock_.steps, cmd, res);
  return res;
}

}  // namespace dronav::runtime
