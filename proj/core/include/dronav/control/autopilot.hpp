#pragma once

#include "dronav/control/flight_controller.hpp"

namespace dronav::control {

/// Runs the cascade at two rates: the outer stage (takeoff sequencer or
/// Twist bridge) every `control_div` physics steps, the attitude loop and
/// mixer every physics step. The outer setpoint is held in between.
class Autopilot {
 public:
  Autopilot(ControllerConfig cfg, vehicle::VehicleParams params, double physics_dt,
            int control_div);

  void reset();

  /// One physics step. `cmd` is only read on outer-loop ticks, and only
  /// once the takeoff sequencer has reached HOLD.
  vehicle::RotorSpeeds step(const vehicle::RigidBodyState& state, const Twist& cmd);

  TakeoffPhase phase() const { return bank_.phase; }
  const ControllerBank& bank() const { return bank_; }
  const AttitudeSetpoint& setpoint() const { return setpoint_; }
  double last_torque_scale() const { return torque_scale_; }

 private:
  ControllerBank bank_;
  vehicle::VehicleParams params_;
  double physics_dt_;
  int control_div_;
  long tick_ = 0;
  AttitudeSetpoint setpoint_;
  double torque_scale_ = 1.0;
};

}  // namespace dronav::control
