#include "dronav/vehicle/quadrotor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dronav/geom/transform.hpp"

namespace dronav::vehicle {

namespace {

// Allocation rows in rotor order FL, FR, RR, RL.
constexpr std::array<double, 4> kRollSign{-1.0, +1.0, +1.0, -1.0};
constexpr std::array<double, 4> kPitchSign{+1.0, +1.0, -1.0, -1.0};
constexpr std::array<double, 4> kYawSign{+1.0, -1.0, +1.0, -1.0};

double moment_arm(const VehicleParams& p) { return p.arm_length / std::numbers::sqrt2; }

RotorSpeeds speeds_from_forces(const std::array<double, 4>& forces, const VehicleParams& p) {
  RotorSpeeds out;
  for (std::size_t i = 0; i < 4; ++i) {
    out.omega[i] = std::clamp(std::sqrt(std::max(forces[i], 0.0) / p.thrust_coeff), 0.0,
                              p.rotor_speed_max);
  }
  return out;
}

}  // namespace

std::vector<std::string> VehicleParams::validate() const {
  std::vector<std::string> errs;
  auto positive = [&](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) errs.push_back(std::string(name) + ": must be > 0");
  };
  positive("mass", mass);
  positive("arm_length", arm_length);
  positive("inertia[0]", inertia_diag.x);
  positive("inertia[1]", inertia_diag.y);
  positive("inertia[2]", inertia_diag.z);
  positive("thrust_coeff", thrust_coeff);
  positive("drag_torque_coeff", drag_torque_coeff);
  positive("rotor_speed_max", rotor_speed_max);
  positive("linear_drag", linear_drag);
  positive("body_radius", body_radius);
  positive("gravity", gravity);
  if (drag_torque_coeff >= thrust_coeff) {
    errs.emplace_back("drag_torque_coeff: must be smaller than thrust_coeff");
  }
  return errs;
}

std::array<double, 4> allocate_forces(const WrenchCommand& cmd, const VehicleParams& params) {
  // The four allocation rows are mutually orthogonal with squared norm 4, so
  // the inverse is the scaled transpose.
  const double d = moment_arm(params);
  const double c = params.drag_torque_coeff / params.thrust_coeff;
  std::array<double, 4> f{};
  for (std::size_t i = 0; i < 4; ++i) {
    f[i] = 0.25 * (cmd.thrust + kRollSign[i] * cmd.torque_roll / d +
                   kPitchSign[i] * cmd.torque_pitch / d + kYawSign[i] * cmd.torque_yaw / c);
  }
  return f;
}

RotorSpeeds mix(const WrenchCommand& cmd, const VehicleParams& params) {
  const auto f = allocate_forces(cmd, params);
  for (std::size_t i = 0; i < 4; ++i) {
    if (f[i] < 0.0) {
      throw UnallocatableError("rotor " + std::to_string(i) + " needs negative force " +
                               std::to_string(f[i]) + " N");
    }
  }
  return speeds_from_forces(f, params);
}

RotorSpeeds mix_saturated(const WrenchCommand& cmd, const VehicleParams& params,
                          double* torque_scale) {
  WrenchCommand base = cmd;
  base.thrust = std::max(cmd.thrust, 0.0);
  const auto f0 = allocate_forces({base.thrust, 0.0, 0.0, 0.0}, params);
  const auto f = allocate_forces(base, params);
  // f(s) = f0 + s * (f - f0) is linear in the torque scale s.
  double scale = 1.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (f[i] < 0.0) scale = std::min(scale, f0[i] / (f0[i] - f[i]));
  }
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) out[i] = f0[i] + scale * (f[i] - f0[i]);
  if (torque_scale) *torque_scale = scale;
  return speeds_from_forces(out, params);
}

WrenchCommand rotor_wrench(const RotorSpeeds& rotors, const VehicleParams& params) {
  const double d = moment_arm(params);
  const double c = params.drag_torque_coeff / params.thrust_coeff;
  WrenchCommand w;
  for (std::size_t i = 0; i < 4; ++i) {
    const double f = params.thrust_coeff * rotors.omega[i] * rotors.omega[i];
    w.thrust += f;
    w.torque_roll += kRollSign[i] * d * f;
    w.torque_pitch += kPitchSign[i] * d * f;
    w.torque_yaw += kYawSign[i] * c * f;
  }
  return w;
}

Vec3 linear_acceleration(const RigidBodyState& s, double thrust, const VehicleParams& p) {
  const double roll = s.attitude.x, pitch = s.attitude.y, yaw = s.attitude.z;
  // Body z axis in the yaw-aligned frame, then rotated by yaw.
  const double bx = -std::sin(pitch) * std::cos(roll);
  const double by = std::sin(roll);
  const double bz = std::cos(pitch) * std::cos(roll);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double a = thrust / p.mass;
  const double k = p.linear_drag / p.mass;
  return {a * (cy * bx - sy * by) - k * s.velocity.x, a * (sy * bx + cy * by) - k * s.velocity.y,
          a * bz - p.gravity - k * s.velocity.z};
}

RigidBodyState step_dynamics(const RigidBodyState& state, const RotorSpeeds& rotors,
                             const VehicleParams& params, double dt) {
  if (!(dt > 0.0 && dt <= 0.02)) throw Error("step_dynamics: dt must lie in (0, 0.02]");
  const WrenchCommand w = rotor_wrench(rotors, params);
  const Vec3 acc = linear_acceleration(state, w.thrust, params);

  RigidBodyState next = state;
  next.velocity = {state.velocity.x + acc.x * dt, state.velocity.y + acc.y * dt,
                   state.velocity.z + acc.z * dt};
  next.position = {state.position.x + next.velocity.x * dt,
                   state.position.y + next.velocity.y * dt,
                   state.position.z + next.velocity.z * dt};

  next.body_rates = {state.body_rates.x + w.torque_roll / params.inertia_diag.x * dt,
                     state.body_rates.y + w.torque_pitch / params.inertia_diag.y * dt,
                     state.body_rates.z + w.torque_yaw / params.inertia_diag.z * dt};
  // Small-angle kinematics: Euler rates equal body rates.
  next.attitude = {geom::normalize_angle(state.attitude.x + next.body_rates.x * dt),
                   geom::normalize_angle(state.attitude.y + next.body_rates.y * dt),
                   geom::normalize_angle(state.attitude.z + next.body_rates.z * dt)};
  next.time = state.time + dt;

  constexpr double kHalfPi = std::numbers::pi / 2.0;
  if (std::abs(next.attitude.x) >= kHalfPi || std::abs(next.attitude.y) >= kHalfPi) {
    throw CrashError("attitude beyond +-pi/2 at t=" + std::to_string(next.time));
  }
  if (next.position.z < 0.0) {
    if (next.velocity.z < -kTouchdownSpeed) {
      throw CrashError("ground impact at " + std::to_string(-next.velocity.z) + " m/s, t=" +
                       std::to_string(next.time));
    }
    next.position.z = 0.0;
    next.velocity.z = std::max(next.velocity.z, 0.0);
  }
  return next;
}

CollisionReport check_collision(const RigidBodyState& state, const WorldModel& world,
                                const VehicleParams& params) {
  // Tangency tolerance absorbs rounding in face coordinates.
  constexpr double kEps = 1e-9;
  const geom::Vec2 p{state.position.x, state.position.y};
  const double r = params.body_radius + kEps;
  CollisionReport rep;
  const Rect& b = world.bounds;
  if (p.x - b.min_x <= r || b.max_x - p.x <= r || p.y - b.min_y <= r || b.max_y - p.y <= r) {
    rep.contact = true;
    rep.out_of_bounds = true;
  }
  for (std::size_t i = 0; i < world.obstacles.size(); ++i) {
    if (distance_to(world.obstacles[i], p) <= r) {
      rep.contact = true;
      rep.shape_id = i;
      break;
    }
  }
  return rep;
}

}  // namespace dronav::vehicle
