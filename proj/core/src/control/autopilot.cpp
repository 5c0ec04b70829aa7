#include "dronav/control/autopilot.hpp"

namespace dronav::control {

Autopilot::Autopilot(ControllerConfig cfg, vehicle::VehicleParams params, double physics_dt,
                     int control_div)
    : params_(params), physics_dt_(physics_dt), control_div_(control_div) {
  bank_.cfg = cfg;
}

void Autopilot::reset() {
  reset_controllers(bank_);
  tick_ = 0;
  setpoint_ = {};
  torque_scale_ = 1.0;
}

vehicle::RotorSpeeds Autopilot::step(const vehicle::RigidBodyState& state, const Twist& cmd) {
  if (tick_ % control_div_ == 0) {
    const double dt = physics_dt_ * control_div_;
    if (bank_.phase == TakeoffPhase::kClimb) {
      setpoint_ = takeoff_sequencer(state, bank_.cfg.hover_altitude, params_, bank_, dt).setpoint;
    } else {
      setpoint_ = twist_to_setpoints(cmd, state, params_, bank_, dt);
    }
  }
  ++tick_;
  const vehicle::WrenchCommand wrench = attitude_loop(setpoint_, state, bank_, physics_dt_);
  return vehicle::mix_saturated(wrench, params_, &torque_scale_);
}

}  // namespace dronav::control
