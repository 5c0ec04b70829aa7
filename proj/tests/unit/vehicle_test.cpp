#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <algorithm>
#include <random>

#include "dronav/vehicle/quadrotor.hpp"
#include "oracles.hpp"
#include "vehicle_oracles.hpp"

namespace dronav::vehicle {
namespace {

using namespace dronav::testing;

RigidBodyState Hovering(double z = 1.0) {
  RigidBodyState s;
  s.position = {5.0, 5.0, z};
  return s;
}

TEST(VehicleParams, DefaultsValidate) {
  EXPECT_TRUE(VehicleParams{}.validate().empty());
  VehicleParams bad;
  bad.mass = -1.0;
  bad.drag_torque_coeff = 1.0;
  const auto errs = bad.validate();
  ASSERT_EQ(errs.size(), 2u);
  EXPECT_EQ(errs[0].rfind("mass", 0), 0u);
}

TEST(Mix, PureThrustIsSymmetric) {
  const VehicleParams p;
  const double t = 15.0;
  const RotorSpeeds r = mix({t, 0, 0, 0}, p);
  for (double w : r.omega) EXPECT_NEAR(w, std::sqrt(t / (4 * p.thrust_coeff)), 1e-9);
}

TEST(Mix, YawTorqueMatchesAllocationSolver) {
  const VehicleParams p;
  const WrenchCommand cmd{15.0, 0.0, 0.0, 0.05};
  const RotorSpeeds r = mix(cmd, p);
  const auto expected = testing::solve<4>(AllocationFromGeometry(p), {15.0, 0.0, 0.0, 0.05});
  const auto f = Forces(r, p);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(f[i], expected[i], 1e-9);
  const double hover = std::sqrt(15.0 / (4 * p.thrust_coeff));
  EXPECT_GT(r.omega[0], hover);  // FL
  EXPECT_GT(r.omega[2], hover);  // RR
  EXPECT_LT(r.omega[1], hover);  // FR
  EXPECT_LT(r.omega[3], hover);  // RL
  EXPECT_NEAR(r.omega[0] - hover, r.omega[2] - hover, 1e-12);
  EXPECT_NEAR(f[0] + f[1] + f[2] + f[3], 15.0, 1e-9);
}

TEST(Mix, RandomWrenchesMatchAllocationSolverAndRoundTrip) {
  const VehicleParams p;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> thrust(5.0, 30.0), tau(-0.3, 0.3), yaw(-0.05, 0.05);
  for (int i = 0; i < 500; ++i) {
    const WrenchCommand cmd{thrust(rng), tau(rng), tau(rng), yaw(rng)};
    const auto want = testing::solve<4>(AllocationFromGeometry(p),
                                        {cmd.thrust, cmd.torque_roll, cmd.torque_pitch, cmd.torque_yaw});
    const auto f = allocate_forces(cmd, p);
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(f[k], want[k], 1e-9);
    if (std::ranges::any_of(want, [](double v) { return v < 0; })) continue;
    const RotorSpeeds r = mix(cmd, p);
    if (std::ranges::any_of(r.omega, [&](double w) { return w >= p.rotor_speed_max; })) continue;
    const WrenchCommand back = rotor_wrench(r, p);
    EXPECT_NEAR(back.thrust, cmd.thrust, 1e-6);
    EXPECT_NEAR(back.torque_roll, cmd.torque_roll, 1e-6);
    EXPECT_NEAR(back.torque_pitch, cmd.torque_pitch, 1e-6);
    EXPECT_NEAR(back.torque_yaw, cmd.torque_yaw, 1e-6);
  }
}

TEST(Mix, PureYawKeepsThrust) {
  const VehicleParams p;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> thrust(5.0, 30.0), yaw(-0.06, 0.06);
  for (int i = 0; i < 200; ++i) {
    const WrenchCommand cmd{thrust(rng), 0, 0, yaw(rng)};
    const auto f = allocate_forces(cmd, p);
    EXPECT_NEAR(f[0] + f[1] + f[2] + f[3], cmd.thrust, 1e-9);
  }
}

TEST(Mix, NegativeForceDemandIsUnallocatable) {
  EXPECT_THROW(mix({0.0, 0.1, 0.0, 0.0}, VehicleParams{}), UnallocatableError);
}

TEST(Mix, SaturatedMixScalesTorquesOnly) {
  const VehicleParams p;
  double scale = 0.0;
  const RotorSpeeds r = mix_saturated({4.0, 2.0, 0.0, 0.0}, p, &scale);
  EXPECT_GT(scale, 0.0);
  EXPECT_LT(scale, 1.0);
  const WrenchCommand w = rotor_wrench(r, p);
  EXPECT_NEAR(w.thrust, 4.0, 1e-9);
  EXPECT_NEAR(w.torque_roll, 2.0 * scale, 1e-9);
  mix_saturated({15.0, 0.1, 0.0, 0.0}, p, &scale);
  EXPECT_EQ(scale, 1.0);
}

TEST(Mix, ClampsToMaxSpeed) {
  const VehicleParams p;
  const RotorSpeeds r = mix({1000.0, 0, 0, 0}, p);
  for (double w : r.omega) EXPECT_EQ(w, p.rotor_speed_max);
}

TEST(StepDynamics, HoverIsEquilibrium) {
  const VehicleParams p;
  const RigidBodyState s0 = Hovering();
  const RigidBodyState s1 = step_dynamics(s0, mix({p.hover_thrust(), 0, 0, 0}, p), p, 0.002);
  EXPECT_NEAR(s1.velocity.z, 0.0, 1e-12);
  EXPECT_NEAR(s1.position.z, 1.0, 1e-12);
  EXPECT_EQ(s1.position.x, s0.position.x);
  EXPECT_EQ(s1.attitude, s0.attitude);
  EXPECT_DOUBLE_EQ(s1.time, 0.002);
}

TEST(StepDynamics, FreeFallAcceleratesAtG) {
  const VehicleParams p;
  const double dt = 0.002;
  const RigidBodyState s1 = step_dynamics(Hovering(), RotorSpeeds{}, p, dt);
  EXPECT_NEAR(s1.velocity.z / dt, -p.gravity, 1e-9);
}

TEST(StepDynamics, TiltAccelerationMatchesClosedForm) {
  VehicleParams p;
  RigidBodyState s = Hovering();
  s.attitude.y = -0.05;
  const double dt = 0.002;
  // Tilt-compensated thrust: vertical component equals weight, ax = g tan(tilt).
  const double thrust = p.hover_thrust() / std::cos(0.05);
  RigidBodyState s1 = step_dynamics(s, mix({thrust, 0, 0, 0}, p), p, dt);
  EXPECT_NEAR(s1.velocity.x / dt, p.gravity * std::tan(0.05), 1e-6);
  EXPECT_NEAR(s1.velocity.z / dt, 0.0, 1e-6);
  // Plain hover thrust: ax = g sin(tilt), within 1e-3 of g tan(tilt).
  s1 = step_dynamics(s, mix({p.hover_thrust(), 0, 0, 0}, p), p, dt);
  EXPECT_NEAR(s1.velocity.x / dt, p.gravity * std::sin(0.05), 1e-6);
  EXPECT_NEAR(s1.velocity.x / dt, p.gravity * std::tan(0.05), 1e-3);
}

TEST(StepDynamics, YawRotatesThrustDirection) {
  const VehicleParams p;
  RigidBodyState s = Hovering();
  s.attitude = {0.0, -0.05, std::numbers::pi / 2};
  const auto a = linear_acceleration(s, p.hover_thrust(), p);
  EXPECT_NEAR(a.x, 0.0, 1e-12);
  EXPECT_NEAR(a.y, p.gravity * std::sin(0.05), 1e-9);
  s.attitude = {0.05, 0.0, 0.0};
  EXPECT_NEAR(linear_acceleration(s, p.hover_thrust(), p).y, p.gravity * std::sin(0.05), 1e-9);
}

TEST(StepDynamics, EnergyNeverIncreasesWithoutThrustOrDrag) {
  VehicleParams p;
  p.linear_drag = 1e-300;  // validate() wants > 0; effectively zero
  RigidBodyState s = Hovering(1000.0);
  s.velocity = {1.0, -0.5, 3.0};
  auto energy = [&](const RigidBodyState& st) {
    const auto& v = st.velocity;
    return 0.5 * p.mass * (v.x * v.x + v.y * v.y + v.z * v.z) + p.mass * p.gravity * st.position.z;
  };
  double e = energy(s);
  for (int i = 0; i < 5000; ++i) {
    s = step_dynamics(s, RotorSpeeds{}, p, 0.002);
    const double e1 = energy(s);
    ASSERT_LE(e1, e + 1e-9 * std::abs(e)) << "step " << i;
    e = e1;
  }
}

TEST(StepDynamics, DeterministicBitIdentical) {
  const VehicleParams p;
  RigidBodyState a = Hovering(), b = Hovering();
  const RotorSpeeds r = mix({15.0, 0.01, -0.02, 0.003}, p);
  for (int i = 0; i < 300; ++i) {
    a = step_dynamics(a, r, p, 0.002);
    b = step_dynamics(b, r, p, 0.002);
  }
  EXPECT_EQ(a, b);
}

TEST(StepDynamics, CrashAndTouchdown) {
  const VehicleParams p;
  RigidBodyState s = Hovering();
  s.attitude.x = 1.5707;
  s.body_rates.x = 1.0;
  EXPECT_THROW(step_dynamics(s, RotorSpeeds{}, p, 0.002), CrashError);

  RigidBodyState fall = Hovering(0.0005);
  fall.velocity.z = -1.0;
  EXPECT_THROW(step_dynamics(fall, RotorSpeeds{}, p, 0.002), CrashError);

  RigidBodyState land = Hovering(0.0001);
  land.velocity.z = -0.1;
  const RigidBodyState after = step_dynamics(land, RotorSpeeds{}, p, 0.002);
  EXPECT_EQ(after.position.z, 0.0);
  EXPECT_EQ(after.velocity.z, 0.0);

  EXPECT_THROW(step_dynamics(land, RotorSpeeds{}, p, 0.05), Error);
  EXPECT_THROW(step_dynamics(land, RotorSpeeds{}, p, 0.0), Error);
}

TEST(CheckCollision, EmptyRoomCenterIsFree) {
  WorldModel w;
  RigidBodyState s = Hovering();
  EXPECT_FALSE(check_collision(s, w, VehicleParams{}).contact);
}

TEST(CheckCollision, TangencyCountsAsContact) {
  WorldModel w;
  w.obstacles.push_back(Rect{4.0, 4.0, 5.0, 5.0});
  const VehicleParams p;
  RigidBodyState s = Hovering();
  s.position.x = 0.3;
  s.position.y = 2.0;
  auto rep = check_collision(s, w, p);
  EXPECT_TRUE(rep.contact);
  EXPECT_TRUE(rep.out_of_bounds);
  s.position = {5.3, 4.5, 1.0};
  rep = check_collision(s, w, p);
  EXPECT_TRUE(rep.contact);
  EXPECT_EQ(rep.shape_id, 0u);
  s.position = {3.7, 4.5, 1.0};
  EXPECT_TRUE(check_collision(s, w, p).contact);
  s.position = {3.69, 4.5, 1.0};
  EXPECT_FALSE(check_collision(s, w, p).contact);
}

TEST(CheckCollision, RandomPosesMatchBruteForce) {
  WorldModel w;
  w.obstacles.push_back(Rect{2.0, 2.0, 3.5, 3.0});
  w.obstacles.push_back(Circle{{6.0, 6.5}, 0.8});
  w.obstacles.push_back(Rect{7.0, 1.0, 7.4, 4.0});
  w.obstacles.push_back(Circle{{3.0, 7.0}, 0.3});
  const VehicleParams p;
  const double r = p.body_radius;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-0.5, 10.5);
  int contacts = 0;
  for (int i = 0; i < 1000; ++i) {
    RigidBodyState s = Hovering();
    s.position.x = u(rng);
    s.position.y = u(rng);
    const double x = s.position.x, y = s.position.y;
    bool expected = !(x >= r && x <= 10.0 - r && y >= r && y <= 10.0 - r) ||
                    x - r <= 0.0 || 10.0 - x <= r || y - r <= 0.0 || 10.0 - y <= r;
    for (const Shape& sh : w.obstacles) {
      if (const auto* rect = std::get_if<Rect>(&sh)) {
        expected = expected || InInflatedRect(*rect, x, y, r);
      } else {
        const auto& c = std::get<Circle>(sh);
        const double dx = x - c.center.x, dy = y - c.center.y;
        expected = expected || dx * dx + dy * dy <= (c.radius + r) * (c.radius + r);
      }
    }
    EXPECT_EQ(check_collision(s, w, p).contact, expected) << x << "," << y;
    contacts += expected;
  }
  EXPECT_GT(contacts, 100);
  EXPECT_LT(contacts, 900);
}

}  // namespace
}  // namespace dronav::vehicle
