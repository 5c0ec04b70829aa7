#include "dronav/runtime/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace dronav::runtime {
namespace {

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += "\n  " + s;
  return out;
}

// Walks one mapping node, converting known keys and collecting problems.
class Block {
 public:
  Block(const YAML::Node& node, std::string path, std::vector<std::string>& errs)
      : node_(node), path_(std::move(path)), errs_(errs), present_(node && !node.IsNull()) {
    if (present_ && !node_.IsMap()) {
      errs_.push_back(path_ + ": expected a mapping");
      present_ = false;
    }
  }
  ~Block() {
    if (!present_) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) errs_.push_back(key_path(key) + ": unknown key");
    }
  }
  Block(const Block&) = delete;
  Block& operator=(const Block&) = delete;

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    if (!present_) return YAML::Node(YAML::NodeType::Undefined);
    return node_[key];
  }

  template <class T>
  void get(const std::string& key, T& out) {
    const auto n = child(key);
    if (!n) return;
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      errs_.push_back(key_path(key) + ": wrong type");
    }
  }

  void get_u8(const std::string& key, std::uint8_t& out) {
    int v = out;
    get(key, v);
    if (v < 0 || v > 255) errs_.push_back(key_path(key) + ": must be in 0..255");
    else out = static_cast<std::uint8_t>(v);
  }

  template <std::size_t N>
  bool get_array(const std::string& key, std::array<double, N>& out) {
    const auto n = child(key);
    if (!n) return false;
    if (!n.IsSequence() || n.size() != N) {
      errs_.push_back(key_path(key) + ": expected a list of " + std::to_string(N) + " numbers");
      return false;
    }
    try {
      for (std::size_t i = 0; i < N; ++i) out[i] = n[i].as<double>();
    } catch (const YAML::Exception&) {
      errs_.push_back(key_path(key) + ": wrong type");
      return false;
    }
    return true;
  }

  bool present() const { return present_; }

 private:
  YAML::Node node_;
  std::string path_;
  std::vector<std::string>& errs_;
  std::set<std::string> seen_;
  bool present_;
};

void read_pid(Block& parent, const std::string& key, control::PidGains& g, std::vector<std::string>& errs) {
  Block b(parent.child(key), parent.key_path(key), errs);
  b.get("kp", g.kp);
  b.get("ki", g.ki);
  b.get("kd", g.kd);
  b.get("i_limit", g.i_limit);
  b.get("output_limit", g.output_limit);
}

void read_world(const YAML::Node& node, vehicle::WorldModel& w, std::vector<std::string>& errs) {
  Block b(node, "world", errs);
  std::array<double, 4> bounds{w.bounds.min_x, w.bounds.min_y, w.bounds.max_x, w.bounds.max_y};
  if (b.get_array("bounds", bounds)) w.bounds = {bounds[0], bounds[1], bounds[2], bounds[3]};
  const auto obs = b.child("obstacles");
  if (!obs) return;
  if (!obs.IsSequence()) {
    errs.push_back("world.obstacles: expected a list");
    return;
  }
  w.obstacles.clear();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string path = "world.obstacles[" + std::to_string(i) + "]";
    Block o(obs[i], path, errs);
    std::string type;
    o.get("type", type);
    if (type == "rect") {
      std::array<double, 2> lo{}, hi{};
      const bool ok = o.get_array("min", lo) & o.get_array("max", hi);
      if (!ok) errs.push_back(path + ": rect needs min and max");
      else w.obstacles.push_back(vehicle::Rect{lo[0], lo[1], hi[0], hi[1]});
    } else if (type == "circle") {
      std::array<double, 2> c{};
      double r = -1.0;
      o.get("radius", r);
      if (!o.get_array("center", c)) errs.push_back(path + ": circle needs center");
      else w.obstacles.push_back(vehicle::Circle{{c[0], c[1]}, r});
    } else {
      errs.push_back(path + ".type: expected rect or circle");
    }
  }
}

void prefix(std::vector<std::string>& errs, const std::string& path, const std::vector<std::string>& found) {
  for (const auto& f : found) errs.push_back(path + "." + f);
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems, const std::string& heading)
    : Error(heading + ":" + join(problems)), problems_(std::move(problems)) {}

const char* to_string(Mode m) { return m == Mode::kMapping ? "MAPPING" : "NAVIGATION"; }

std::optional<Mode> parse_mode(const std::string& s) {
  if (s == "MAPPING") return Mode::kMapping;
  if (s == "NAVIGATION") return Mode::kNavigation;
  return std::nullopt;
}

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> errs;
  const auto& b = s.world.bounds;
  if (!(b.max_x > b.min_x && b.max_y > b.min_y)) errs.push_back("world.bounds: max must exceed min");
  for (std::size_t i = 0; i < s.world.obstacles.size(); ++i) {
    const std::string path = "world.obstacles[" + std::to_string(i) + "]";
    if (const auto* r = std::get_if<vehicle::Rect>(&s.world.obstacles[i])) {
      if (!(r->max_x > r->min_x && r->max_y > r->min_y)) errs.push_back(path + ": max must exceed min");
    } else if (std::get<vehicle::Circle>(s.world.obstacles[i]).radius <= 0.0) {
      errs.push_back(path + ".radius: must be positive");
    }
  }
  prefix(errs, "vehicle", s.vehicle.validate());
  prefix(errs, "lidar", s.lidar.validate());
  prefix(errs, "nav.dwa", s.nav.dwa.validate());

  const auto& c = s.clock;
  if (!(c.physics_dt > 0.0 && c.physics_dt <= 0.02)) errs.push_back("clock.physics_dt: must be in (0, 0.02]");
  if (c.control_div < 1) errs.push_back("clock.control_div: must be >= 1");
  if (c.sensor_div < 1) errs.push_back("clock.sensor_div: must be >= 1");
  if (c.physics_dt > 0.0 && c.sensor_div >= 1 &&
      std::abs(1.0 / (c.physics_dt * c.sensor_div) - s.lidar.rate) > 1e-9 * s.lidar.rate)
    errs.push_back("lidar.rate: must equal 1 / (clock.physics_dt * clock.sensor_div)");

  const auto& ct = s.controllers;
  if (!(ct.max_tilt > 0.0 && ct.max_tilt < 1.2)) errs.push_back("controllers.max_tilt: must be in (0, 1.2)");
  if (!(ct.hover_altitude > 0.0)) errs.push_back("controllers.hover_altitude: must be positive");

  const auto& sl = s.slam;
  if (!(sl.initial_geometry.resolution > 0.0)) errs.push_back("slam.resolution: must be positive");
  if (sl.initial_geometry.width < 1 || sl.initial_geometry.height < 1) errs.push_back("slam.size: must be positive");
  if (!(sl.log_odds.p_hit > 0.5 && sl.log_odds.p_hit < 1.0)) errs.push_back("slam.p_hit: must be in (0.5, 1)");
  if (!(sl.log_odds.p_free > 0.0 && sl.log_odds.p_free < 0.5)) errs.push_back("slam.p_free: must be in (0, 0.5)");
  if (!(sl.log_odds.l_min < 0.0 && sl.log_odds.l_max > 0.0)) errs.push_back("slam.l_min/l_max: must bracket 0");
  if (!(sl.min_score >= 0.0 && sl.min_score <= 1.0)) errs.push_back("slam.min_score: must be in [0, 1]");

  const auto& a = s.amcl;
  if (a.limits.n_min < 1 || a.limits.n_max < a.limits.n_min) errs.push_back("amcl.min_particles/max_particles: need 1 <= min <= max");
  if (a.particles < a.limits.n_min || a.particles > a.limits.n_max) errs.push_back("amcl.particles: outside [min_particles, max_particles]");
  if (!(a.measurement.z_hit >= 0 && a.measurement.z_rand >= 0 && a.measurement.z_hit + a.measurement.z_rand > 0))
    errs.push_back("amcl.z_hit/z_rand: must be non-negative and not both zero");
  if (!(a.measurement.sigma_hit > 0.0)) errs.push_back("amcl.sigma_hit: must be positive");
  if (a.measurement.subsample < 1) errs.push_back("amcl.subsample: must be >= 1");
  if (!(a.resample_ratio > 0.0 && a.resample_ratio <= 1.0)) errs.push_back("amcl.resample_ratio: must be in (0, 1]");

  const auto& cm = s.costmap;
  if (!(cm.robot_radius >= 0.0)) errs.push_back("nav.robot_radius: must be non-negative");
  if (!(cm.inflation_radius >= cm.robot_radius)) errs.push_back("nav.inflation_radius: must be >= nav.robot_radius");
  if (!(cm.cost_decay > 0.0)) errs.push_back("nav.cost_decay: must be positive");
  if (!(s.nav.tolerances.xy > 0.0 && s.nav.tolerances.yaw > 0.0)) errs.push_back("nav.tolerance: must be positive");
  if (s.nav.max_failures < 1) errs.push_back("nav.max_failures: must be >= 1");

  if (!(s.teleop.v > 0.0 && s.teleop.w > 0.0)) errs.push_back("teleop: speeds must be positive");
  if (!s.world.is_free(s.start.position())) errs.push_back("start: must lie in free space");
  if (s.mode == Mode::kNavigation && !s.map_path) errs.push_back("map_path: required in NAVIGATION mode");
  return errs;
}

Scenario parse_scenario(const std::string& yaml_text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ValidationError({"yaml: " + std::string(e.what())});
  }
  if (!root || root.IsNull()) throw ValidationError({"yaml: empty document"});
  std::vector<std::string> errs;
  Scenario s;
  s.source_text = yaml_text;
  {
    Block top(root, "", errs);
    top.get("name", s.name);
    if (!top.child("world")) errs.push_back("world: required");
    else read_world(top.child("world"), s.world, errs);

    {
      Block v(top.child("vehicle"), "vehicle", errs);
      auto& p = s.vehicle;
      v.get("mass", p.mass);
      v.get("arm_length", p.arm_length);
      std::array<double, 3> in{p.inertia_diag.x, p.inertia_diag.y, p.inertia_diag.z};
      if (v.get_array("inertia", in)) p.inertia_diag = {in[0], in[1], in[2]};
      v.get("thrust_coeff", p.thrust_coeff);
      v.get("drag_torque_coeff", p.drag_torque_coeff);
      v.get("rotor_speed_max", p.rotor_speed_max);
      v.get("linear_drag", p.linear_drag);
      v.get("body_radius", p.body_radius);
      v.get("gravity", p.gravity);
    }
    {
      Block l(top.child("lidar"), "lidar", errs);
      auto& p = s.lidar;
      l.get("angle_min", p.angle_min);
      l.get("angle_max", p.angle_max);
      l.get("num_beams", p.num_beams);
      l.get("range_min", p.range_min);
      l.get("range_max", p.range_max);
      l.get("noise_sigma", p.noise_sigma);
      l.get("rate", p.rate);
      std::array<double, 3> m{};
      if (l.get_array("mount", m)) s.base_to_lidar = {m[0], m[1], m[2]};
    }
    {
      Block c(top.child("controllers"), "controllers", errs);
      auto& p = s.controllers;
      read_pid(c, "altitude", p.altitude, errs);
      read_pid(c, "attitude", p.attitude, errs);
      read_pid(c, "yaw_rate", p.yaw_rate, errs);
      read_pid(c, "velocity", p.velocity, errs);
      c.get("max_tilt", p.max_tilt);
      c.get("hover_altitude", p.hover_altitude);
      c.get("hold_confirm", p.hold_confirm);
      c.get("hold_band_z", p.hold_band_z);
      c.get("hold_band_vz", p.hold_band_vz);
    }
    {
      Block c(top.child("clock"), "clock", errs);
      c.get("physics_dt", s.clock.physics_dt);
      c.get("control_div", s.clock.control_div);
      c.get("sensor_div", s.clock.sensor_div);
    }
    {
      Block sl(top.child("slam"), "slam", errs);
      auto& p = s.slam;
      sl.get("resolution", p.initial_geometry.resolution);
      std::array<double, 2> size{double(p.initial_geometry.width), double(p.initial_geometry.height)};
      if (sl.get_array("size", size)) {
        p.initial_geometry.width = static_cast<int>(size[0]);
        p.initial_geometry.height = static_cast<int>(size[1]);
      }
      std::array<double, 2> origin{p.initial_geometry.origin.x, p.initial_geometry.origin.y};
      if (sl.get_array("origin", origin)) p.initial_geometry.origin = {origin[0], origin[1]};
      sl.get("p_hit", p.log_odds.p_hit);
      sl.get("p_free", p.log_odds.p_free);
      sl.get("l_min", p.log_odds.l_min);
      sl.get("l_max", p.log_odds.l_max);
      sl.get("occ_threshold", p.log_odds.occ_threshold);
      sl.get("free_threshold", p.log_odds.free_threshold);
      std::array<double, 3> win{p.window.dx, p.window.dy, p.window.dtheta};
      if (sl.get_array("window", win)) {
        p.window.dx = win[0];
        p.window.dy = win[1];
        p.window.dtheta = win[2];
      }
      sl.get("angular_step", p.window.angular_step);
      sl.get("subcell_refine", p.window.subcell_refine);
      sl.get("min_score", p.min_score);
      sl.get("match_translation", p.match_translation);
      sl.get("match_rotation", p.match_rotation);
      sl.get("min_returns", p.min_returns);
      sl.get("matcher_enabled", p.matcher_enabled);
      sl.get("integrate_stationary", p.integrate_stationary);
    }
    {
      Block a(top.child("amcl"), "amcl", errs);
      auto& p = s.amcl;
      a.get("particles", p.particles);
      a.get("min_particles", p.limits.n_min);
      a.get("max_particles", p.limits.n_max);
      a.get_array("init_sigma", p.init_sigma);
      std::array<double, 4> al{p.motion.a1, p.motion.a2, p.motion.a3, p.motion.a4};
      if (a.get_array("alphas", al)) p.motion = {al[0], al[1], al[2], al[3]};
      a.get("z_hit", p.measurement.z_hit);
      a.get("z_rand", p.measurement.z_rand);
      a.get("sigma_hit", p.measurement.sigma_hit);
      a.get("subsample", p.measurement.subsample);
      a.get("field_max_distance", p.field_max_distance);
      a.get("update_min_d", p.update_min_d);
      a.get("update_min_a", p.update_min_a);
      a.get("forced_updates", p.forced_updates);
      a.get("resample_ratio", p.resample_ratio);
      a.get("roughen_xy", p.roughen_xy);
      a.get("roughen_theta", p.roughen_theta);
    }
    {
      Block n(top.child("nav"), "nav", errs);
      auto& p = s.nav;
      std::array<double, 2> tol{p.tolerances.xy, p.tolerances.yaw};
      if (n.get_array("tolerance", tol)) p.tolerances = {tol[0], tol[1]};
      n.get("robot_radius", s.costmap.robot_radius);
      n.get("inflation_radius", s.costmap.inflation_radius);
      n.get("cost_decay", s.costmap.cost_decay);
      n.get("unknown_traversable", s.costmap.unknown_traversable);
      n.get_u8("unknown_cost", s.costmap.unknown_cost);
      n.get("blocked_replan_after", p.blocked_replan_after);
      n.get("recovery_duration", p.recovery_duration);
      n.get("recovery_rate", p.recovery_rate);
      n.get("max_failures", p.max_failures);
      {
        Block d(n.child("dwa"), "nav.dwa", errs);
        auto& w = p.dwa;
        d.get("v_max", w.v_max);
        d.get("v_min", w.v_min);
        d.get("w_max", w.w_max);
        d.get("acc_v", w.acc_v);
        d.get("acc_w", w.acc_w);
        d.get("sim_horizon", w.sim_horizon);
        d.get("v_samples", w.v_samples);
        d.get("w_samples", w.w_samples);
        d.get("lookahead", w.lookahead);
        d.get("clearance_cap", w.clearance_cap);
        d.get("cross_track_deadband", w.cross_track_deadband);
        std::array<double, 4> wt{w.weights.heading, w.weights.clearance, w.weights.velocity, w.weights.path};
        if (d.get_array("weights", wt)) w.weights = {wt[0], wt[1], wt[2], wt[3]};
      }
    }
    {
      Block t(top.child("teleop"), "teleop", errs);
      t.get("v", s.teleop.v);
      t.get("w", s.teleop.w);
    }
    std::array<double, 3> start{s.start.x, s.start.y, s.start.theta};
    if (top.get_array("start", start)) s.start = {start[0], start[1], start[2]};
    top.get("seed", s.seed);
    std::string mode = "MAPPING";
    top.get("mode", mode);
    if (auto m = parse_mode(mode)) s.mode = *m;
    else errs.push_back("mode: expected MAPPING or NAVIGATION");
    std::string map_path;
    top.get("map_path", map_path);
    if (!map_path.empty()) {
      std::filesystem::path mp(map_path);
      if (mp.is_relative()) mp = std::filesystem::path(base_dir) / mp;
      s.map_path = mp.lexically_normal().string();
    }
  }
  s.nav.dwa.control_period = s.clock.physics_dt * s.clock.sensor_div;
  for (auto& e : validate(s)) errs.push_back(std::move(e));
  if (!errs.empty()) throw ValidationError(errs);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"scenario: cannot open " + path});
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_scenario(ss.str(), dir.empty() ? "." : dir.string());
}

}  // namespace dronav::runtime
