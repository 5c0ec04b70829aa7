#include "dronav/control/pid.hpp"

#include <algorithm>

namespace dronav::control {

PidResult pid_step(const PidGains& g, const PidState& st, double setpoint, double measured,
                   double dt) {
  const double error = setpoint - measured;
  PidState next;
  next.integral = std::clamp(st.integral + error * dt, -g.i_limit, g.i_limit);
  const double derivative = st.initialized ? (error - st.prev_error) / dt : 0.0;
  next.prev_error = error;
  next.initialized = true;
  const double out = g.kp * error + g.ki * next.integral + g.kd * derivative;
  return {std::clamp(out, -g.output_limit, g.output_limit), next};
}

}  // namespace dronav::control
