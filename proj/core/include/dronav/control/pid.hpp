#pragma once

namespace dronav::control {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double i_limit = 1.0;       // clamp on the accumulated error integral
  double output_limit = 1.0;  // symmetric output clamp
};

struct PidState {
  double integral = 0.0;
  double prev_error = 0.0;
  bool initialized = false;
};

struct PidResult {
  double output = 0.0;
  PidState state;
};

/// Derivative acts on the error and is zero on the first call.
PidResult pid_step(const PidGains& gains, const PidState& st, double setpoint, double measured,
                   double dt);

}  // namespace dronav::control
