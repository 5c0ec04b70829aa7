#include "dronav/control/flight_controller.hpp"

#include <algorithm>
#include <cmath>

namespace dronav::control {

namespace {

AttitudeSetpoint hold_altitude(const Twist& cmd, const vehicle::RigidBodyState& s,
                               const vehicle::VehicleParams& params, ControllerBank& loops,
                               double altitude_set, double dt) {
  const ControllerConfig& cfg = loops.cfg;
  const double yaw = s.attitude.z;
  const double c = std::cos(yaw), sn = std::sin(yaw);
  const double vx_body = c * s.velocity.x + sn * s.velocity.y;
  const double vy_body = -sn * s.velocity.x + c * s.velocity.y;

  const PidResult vx = pid_step(cfg.velocity, loops.vel_x, cmd.linear.x, vx_body, dt);
  const PidResult vy = pid_step(cfg.velocity, loops.vel_y, cmd.linear.y, vy_body, dt);
  const PidResult alt = pid_step(cfg.altitude, loops.altitude, altitude_set, s.position.z, dt);
  loops.vel_x = vx.state;
  loops.vel_y = vy.state;
  loops.altitude = alt.state;

  AttitudeSetpoint sp;
  sp.altitude_set = altitude_set;
  // Forward motion needs nose-down (negative) pitch; leftward needs positive roll.
  sp.pitch_set = std::clamp(-vx.output, -cfg.max_tilt, cfg.max_tilt);
  sp.roll_set = std::clamp(vy.output, -cfg.max_tilt, cfg.max_tilt);
  sp.yaw_rate_set = cmd.angular.z;
  // Keep the vertical thrust component constant while tilted.
  const double tilt = std::cos(s.attitude.x) * std::cos(s.attitude.y);
  sp.thrust = std::max(0.0, (params.mass * params.gravity + alt.output) / tilt);
  return sp;
}

}  // namespace

bool Twist::is_finite() const {
  for (double v : {linear.x, linear.y, linear.z, angular.x, angular.y, angular.z}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void reset_controllers(ControllerBank& loops) {
  const ControllerConfig cfg = loops.cfg;
  loops = ControllerBank{};
  loops.cfg = cfg;
}

AttitudeSetpoint twist_to_setpoints(const Twist& cmd, const vehicle::RigidBodyState& state,
                                    const vehicle::VehicleParams& params, ControllerBank& loops,
                                    double dt) {
  if (!loops.altitude_hold_engaged) throw NotAirborneError("altitude hold not engaged");
  loops.command = cmd;
  return hold_altitude(cmd, state, params, loops, loops.cfg.hover_altitude, dt);
}

vehicle::WrenchCommand attitude_loop(const AttitudeSetpoint& sp,
                                     const vehicle::RigidBodyState& s, ControllerBank& loops,
                                     double dt) {
  const ControllerConfig& cfg = loops.cfg;
  const PidResult roll = pid_step(cfg.attitude, loops.roll, sp.roll_set, s.attitude.x, dt);
  const PidResult pitch = pid_step(cfg.attitude, loops.pitch, sp.pitch_set, s.attitude.y, dt);
  const PidResult yaw = pid_step(cfg.yaw_rate, loops.yaw_rate, sp.yaw_rate_set, s.body_rates.z, dt);
  loops.roll = roll.state;
  loops.pitch = pitch.state;
  loops.yaw_rate = yaw.state;
  return {sp.thrust, roll.output, pitch.output, yaw.output};
}

TakeoffOutput takeoff_sequencer(const vehicle::RigidBodyState& state, double target_alt,
                                const vehicle::VehicleParams& params, ControllerBank& loops,
                                double dt) {
  if (!(target_alt > 0.0)) throw Error("takeoff target altitude must be positive");
  const ControllerConfig& cfg = loops.cfg;
  TakeoffOutput out;
  out.setpoint = hold_altitude(Twist{}, state, params, loops, target_alt, dt);
  loops.command = Twist{};
  if (loops.phase == TakeoffPhase::kClimb) {
    const bool in_band = std::abs(state.position.z - target_alt) <= cfg.hold_band_z &&
                         std::abs(state.velocity.z) <= cfg.hold_band_vz;
    loops.in_band_time = in_band ? loops.in_band_time + dt : 0.0;
    if (loops.in_band_time >= cfg.hold_confirm - 1e-12) {
      loops.phase = TakeoffPhase::kHold;
      loops.altitude_hold_engaged = true;
    }
  }
  out.phase = loops.phase;
  return out;
}

}  // namespace dronav::control
