#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dronav/error.hpp"
#include "dronav/vehicle/world.hpp"

namespace dronav::vehicle {

class UnallocatableError : public Error {
  using Error::Error;
};
class CrashError : public Error {
  using Error::Error;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Airframe constants; defaults approximate a DJI F450 with 10" props.
struct VehicleParams {
  double mass = 1.5;                       // kg
  double arm_length = 0.225;               // m, center to rotor
  Vec3 inertia_diag{0.015, 0.015, 0.027};  // kg m^2
  double thrust_coeff = 1.3e-5;            // N / (rad/s)^2
  double drag_torque_coeff = 2.0e-7;       // N m / (rad/s)^2
  double rotor_speed_max = 1000.0;         // rad/s
  double linear_drag = 0.3;                // N s / m
  double body_radius = 0.3;                // m
  double gravity = 9.81;                   // m/s^2

  /// Problems found, as "field: reason" strings; empty when valid.
  std::vector<std::string> validate() const;
  double hover_thrust() const { return mass * gravity; }
};

/// Truth state. Attitude convention (z up): positive roll tilts the thrust
/// vector toward +y (left), positive pitch tilts it toward -x (nose up).
struct RigidBodyState {
  Vec3 position;
  Vec3 velocity;
  Vec3 attitude;    // roll, pitch, yaw
  Vec3 body_rates;  // p, q, r
  double time = 0.0;

  friend bool operator==(const RigidBodyState&, const RigidBodyState&) = default;
};

/// Rotor order: front-left, front-right, rear-right, rear-left (X frame).
/// FL and RR spin counter-clockwise, FR and RL clockwise.
struct RotorSpeeds {
  std::array<double, 4> omega{};
  friend bool operator==(const RotorSpeeds&, const RotorSpeeds&) = default;
};

struct WrenchCommand {
  double thrust = 0.0;  // N along body z, >= 0
  double torque_roll = 0.0;
  double torque_pitch = 0.0;
  double torque_yaw = 0.0;
};

/// Per-rotor forces that realize `cmd` exactly (may be negative).
std::array<double, 4> allocate_forces(const WrenchCommand& cmd, const VehicleParams& params);

/// Rotor speeds for `cmd`. Throws UnallocatableError when any rotor would
/// need a negative force; clamps to rotor_speed_max afterwards.
RotorSpeeds mix(const WrenchCommand& cmd, const VehicleParams& params);

/// Like mix(), but scales the torque demand down until every rotor force is
/// non-negative. Returns the scale applied in [0, 1] through `torque_scale`.
RotorSpeeds mix_saturated(const WrenchCommand& cmd, const VehicleParams& params,
                          double* torque_scale = nullptr);

/// Wrench produced by the given rotor speeds (forward model of mix()).
WrenchCommand rotor_wrench(const RotorSpeeds& rotors, const VehicleParams& params);

/// World-frame linear acceleration for a given state and wrench.
Vec3 linear_acceleration(const RigidBodyState& state, double thrust, const VehicleParams& params);

inline constexpr double kTouchdownSpeed = 0.2;  // m/s

/// One semi-implicit Euler step. Requires dt in (0, 0.02].
/// Throws CrashError on |roll| or |pitch| >= pi/2, or a hard ground impact.
RigidBodyState step_dynamics(const RigidBodyState& state, const RotorSpeeds& rotors,
                             const VehicleParams& params, double dt);

struct CollisionReport {
  bool contact = false;
  bool out_of_bounds = false;
  std::optional<std::size_t> shape_id;  // index into WorldModel::obstacles
};

/// Body disc at (x, y) vs the world. Tangency counts as contact.
CollisionReport check_collision(const RigidBodyState& state, const WorldModel& world,
                                const VehicleParams& params);

}  // namespace dronav::vehicle
