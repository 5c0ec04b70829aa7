#pragma once

#include "dronav/control/pid.hpp"
#include "dronav/error.hpp"
#include "dronav/vehicle/quadrotor.hpp"

namespace dronav::control {

class NotAirborneError : public Error {
  using Error::Error;
};

/// Velocity command: linear m/s and angular rad/s, body frame.
struct Twist {
  vehicle::Vec3 linear;
  vehicle::Vec3 angular;

  static Twist planar(double vx, double wz) { return {{vx, 0.0, 0.0}, {0.0, 0.0, wz}}; }
  bool is_finite() const;
  friend bool operator==(const Twist&, const Twist&) = default;
};

struct AttitudeSetpoint {
  double thrust = 0.0;  // N
  double roll_set = 0.0;
  double pitch_set = 0.0;
  double yaw_rate_set = 0.0;
  double altitude_set = 0.0;
};

struct ControllerConfig {
  PidGains altitude{8.0, 2.0, 5.0, 0.05, 6.0};  // m -> N
  PidGains attitude{4.0, 0.5, 1.0, 0.1, 0.5};   // rad -> N m (roll and pitch)
  PidGains yaw_rate{2.0, 0.2, 0.0, 0.2, 0.08};  // rad/s -> N m
  PidGains velocity{0.25, 0.05, 0.0, 1.0, 0.25};  // m/s -> rad of tilt
  double max_tilt = 0.25;                       // rad
  double hover_altitude = 1.0;                  // m
  double hold_confirm = 0.5;                    // s inside the band before HOLD
  double hold_band_z = 0.05;                    // m
  double hold_band_vz = 0.05;                   // m/s
  double bridge_period = 0.02;                  // s, Twist bridge evaluation period
};

enum class TakeoffPhase { kClimb, kHold };

/// All loop states of the cascade. Owned and advanced by one caller.
struct ControllerBank {
  ControllerConfig cfg;
  PidState altitude, roll, pitch, yaw_rate, vel_x, vel_y;
  Twist command;  // last accepted Twist; zero after reset
  bool altitude_hold_engaged = false;
  TakeoffPhase phase = TakeoffPhase::kClimb;
  double in_band_time = 0.0;
};

/// Zeroes every loop state; the commanded Twist becomes zero.
void reset_controllers(ControllerBank& loops);

/// Twist bridge: body velocities to attitude setpoints at fixed altitude.
/// linear.z is ignored. Throws NotAirborneError before altitude hold engages.
AttitudeSetpoint twist_to_setpoints(const Twist& cmd, const vehicle::RigidBodyState& state,
                                    const vehicle::VehicleParams& params, ControllerBank& loops,
                                    double dt);

/// Angle and rate loops producing the body wrench; thrust passes through.
vehicle::WrenchCommand attitude_loop(const AttitudeSetpoint& sp,
                                     const vehicle::RigidBodyState& state, ControllerBank& loops,
                                     double dt);

struct TakeoffOutput {
  AttitudeSetpoint setpoint;
  TakeoffPhase phase = TakeoffPhase::kClimb;
};

/// Climbs to target_alt holding zero horizontal velocity. Switches to HOLD
/// (and engages altitude hold) after hold_confirm seconds inside the band.
TakeoffOutput takeoff_sequencer(const vehicle::RigidBodyState& state, double target_alt,
                                const vehicle::VehicleParams& params, ControllerBank& loops,
                                double dt);

}  // namespace dronav::control
