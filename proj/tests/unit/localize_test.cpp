#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>

#include "dronav/localize/amcl.hpp"
#include "dronav/localize/filter.hpp"
#include "dronav/mapping/scan_update.hpp"
#include "dronav/sensing/laser_odometry.hpp"
#include "worlds.hpp"

namespace dronav::localize {
namespace {

using geom::Pose2D;
using geom::Transform2D;

const LikelihoodField& SampleField() {
  static const LikelihoodField field = [] {
    const auto w = testing::SampleWorld();
    mapping::LogOddsGrid grid({0.05, 220, 220, {-0.525, -0.525}});
    const auto tour =
        testing::KinematicTour({{2.5, 2.5}, {7.5, 2.5}, {7.5, 7.5}, {2.5, 7.5}, {2.5, 2.5}, {2.5, 5.0}, {7.5, 5.0}});
    for (std::size_t k = 0; k < tour.size(); ++k)
      mapping::integrate_scan(grid, tour[k], sensing::raycast_scan(w, tour[k], {}, k));
    return LikelihoodField(mapping::to_occupancy(grid));
  }();
  return field;
}

double SumWeights(const ParticleSet& ps) {
  double s = 0.0;
  for (const auto& p : ps.particles) s += p.weight;
  return s;
}

TEST(InitParticles, ZeroSigmaCollapses) {
  const Pose2D est{1, 2, 0.5};
  const auto ps = init_particles(est, {0, 0, 0}, 300, 1);
  ASSERT_EQ(ps.size(), 300u);
  for (const auto& p : ps.particles) {
    EXPECT_EQ(p.pose.x, 1.0);
    EXPECT_EQ(p.pose.y, 2.0);
    EXPECT_EQ(p.pose.theta, 0.5);
    EXPECT_DOUBLE_EQ(p.weight, 1.0 / 300);
  }
}

TEST(InitParticles, SameSeedIsBitIdentical) {
  const auto a = init_particles({1, 2, 0.5}, {0.3, 0.3, 0.2}, 1000, 42);
  const auto b = init_particles({1, 2, 0.5}, {0.3, 0.3, 0.2}, 1000, 42);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.particles[i].pose.x, b.particles[i].pose.x);
    EXPECT_EQ(a.particles[i].pose.y, b.particles[i].pose.y);
    EXPECT_EQ(a.particles[i].pose.theta, b.particles[i].pose.theta);
  }
}

TEST(InitParticles, SampleMeanWithinThreeStandardErrors) {
  const std::array<double, 3> sigma{0.3, 0.2, 0.1};
  const int n = 1000;
  const auto ps = init_particles({4, 5, 0.3}, sigma, n, 7);
  double mx = 0, my = 0, mt = 0;
  for (const auto& p : ps.particles) {
    mx += p.pose.x / n;
    my += p.pose.y / n;
    mt += p.pose.theta / n;
  }
  EXPECT_LE(std::abs(mx - 4), 3 * sigma[0] / std::sqrt(n));
  EXPECT_LE(std::abs(my - 5), 3 * sigma[1] / std::sqrt(n));
  EXPECT_LE(std::abs(mt - 0.3), 3 * sigma[2] / std::sqrt(n));
}

TEST(InitParticles, CountOutsideLimitsThrows) {
  EXPECT_THROW(init_particles({}, {0, 0, 0}, 199, 1), BadCountError);
  EXPECT_THROW(init_particles({}, {0, 0, 0}, 5001, 1), BadCountError);
  EXPECT_NO_THROW(init_particles({}, {0, 0, 0}, 200, 1));
}

TEST(MotionUpdate, IdentityWithoutNoiseIsNoop) {
  auto ps = init_particles({1, 1, 0}, {0.2, 0.2, 0.5}, 200, 3);
  const auto before = ps;
  motion_update(ps, Transform2D::identity(), MotionNoise{0, 0, 0, 0}, 9);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(ps.particles[i].pose.x, before.particles[i].pose.x);
    EXPECT_EQ(ps.particles[i].pose.theta, before.particles[i].pose.theta);
    EXPECT_EQ(ps.particles[i].weight, before.particles[i].weight);
  }
}

TEST(MotionUpdate, UnitStepMovesAlongOwnHeading) {
  auto ps = init_particles({1, 1, 0}, {0.2, 0.2, 3.0}, 200, 3);
  const auto before = ps;
  motion_update(ps, Transform2D{1, 0, 0}, MotionNoise{0, 0, 0, 0}, 9);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& b = before.particles[i].pose;
    EXPECT_NEAR(ps.particles[i].pose.x, b.x + std::cos(b.theta), 1e-12);
    EXPECT_NEAR(ps.particles[i].pose.y, b.y + std::sin(b.theta), 1e-12);
    EXPECT_NEAR(geom::angle_diff(ps.particles[i].pose.theta, b.theta), 0.0, 1e-12);
  }
}

double SpreadTrace(const ParticleSet& ps) {
  const auto e = estimate(ps);
  return e.covariance_diag[0] + e.covariance_diag[1] + e.covariance_diag[2];
}

TEST(MotionUpdate, NoiseIncreasesSpreadProperty) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    auto ps = init_particles({2, 2, u(rng)}, {0.05, 0.05, 0.05}, 500, t);
    const double before = SpreadTrace(ps);
    motion_update(ps, Transform2D{0.5 * u(rng) + 0.6, 0.1 * u(rng), 0.3 * u(rng)}, MotionNoise{}, 100 + t);
    EXPECT_GT(SpreadTrace(ps), before);
  }
}

TEST(MeasurementUpdate, TruthBeatsPerturbedCopies) {
  const auto w = testing::SampleWorld();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(0.5, 9.5), ua(-3, 3);
  int checked = 0;
  while (checked < 10) {
    const Pose2D truth{ux(rng), ux(rng), ua(rng)};
    if (!w.is_free(truth.position())) continue;
    ParticleSet ps;
    ps.particles.push_back({truth, 1.0 / 9});
    for (const double dx : {-0.2, 0.2})
      for (const double dt : {-10.0, 10.0}) {
        ps.particles.push_back({Pose2D{truth.x + dx, truth.y, truth.theta + dt * std::numbers::pi / 180}, 1.0 / 9});
        ps.particles.push_back({Pose2D{truth.x, truth.y + dx, truth.theta - dt * std::numbers::pi / 180}, 1.0 / 9});
      }
    ASSERT_EQ(ps.size(), 9u);
    ps.normalized = true;
    const auto scan = sensing::raycast_scan(w, truth, {}, checked);
    ASSERT_EQ(measurement_update(ps, scan, SampleField()), MeasurementStatus::kUpdated);
    for (std::size_t i = 1; i < ps.size(); ++i) EXPECT_GT(ps.particles[0].weight, ps.particles[i].weight);
    EXPECT_NEAR(SumWeights(ps), 1.0, 1e-9);
    ++checked;
  }
}

TEST(MeasurementUpdate, UniformFieldLeavesWeights) {
  mapping::OccupancyGrid empty({0.05, 100, 100, {0, 0}}, mapping::CellState::kFree);
  const LikelihoodField field(empty);
  auto ps = init_particles({2.5, 2.5, 0}, {0.3, 0.3, 0.3}, 200, 4);
  const auto scan = sensing::raycast_scan(testing::SampleWorld(), {2.5, 2.5, 0}, {}, 1);
  measurement_update(ps, scan, field);
  for (const auto& p : ps.particles) EXPECT_NEAR(p.weight, 1.0 / 200, 1e-15);
}

TEST(MeasurementUpdate, NoFiniteBeamsIsNoInfo) {
  auto ps = init_particles({2.5, 2.5, 0}, {0.3, 0.3, 0.3}, 200, 4);
  const auto before = ps;
  sensing::LaserScan scan;
  scan.ranges.assign(scan.spec.num_beams, sensing::kNoReturn);
  EXPECT_EQ(measurement_update(ps, scan, SampleField()), MeasurementStatus::kNoInfo);
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(ps.particles[i].weight, before.particles[i].weight);
}

TEST(MeasurementUpdate, AllZeroPriorThrows) {
  auto ps = init_particles({2.5, 2.5, 0}, {0.3, 0.3, 0.3}, 200, 4);
  for (auto& p : ps.particles) p.weight = 0.0;
  const auto scan = sensing::raycast_scan(testing::SampleWorld(), {2.5, 2.5, 0}, {}, 1);
  EXPECT_THROW(measurement_update(ps, scan, SampleField()), AllZeroWeightError);
}

TEST(LikelihoodField, ZeroOnOccupiedAndNonNegative) {
  const auto& f = SampleField();
  const auto& g = f.geometry();
  int occupied_seen = 0;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const double d = f.distance_at({x, y});
      ASSERT_GE(d, 0.0);
      ASSERT_LE(d, f.max_distance());
      if (d == 0.0) ++occupied_seen;
    }
  EXPECT_GT(occupied_seen, 500);
}

TEST(Resample, UniformWeightsReproduceEachOnce) {
  auto ps = init_particles({2, 2, 0}, {0.3, 0.3, 0.3}, 500, 5);
  const auto out = resample(ps, 77);
  ASSERT_EQ(out.size(), ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(out.particles[i].pose.x, ps.particles[i].pose.x);
}

TEST(Resample, SingleWinnerTakesAll) {
  auto ps = init_particles({2, 2, 0}, {0.3, 0.3, 0.3}, 300, 5);
  for (auto& p : ps.particles) p.weight = 0.0;
  ps.particles[123].weight = 1.0;
  const auto out = resample(ps, 78);
  for (const auto& p : out.particles) EXPECT_EQ(p.pose.x, ps.particles[123].pose.x);
}

TEST(Resample, MultiplicityTracksWeightsProperty) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 30; ++t) {
    auto ps = init_particles({2, 2, 0}, {1, 1, 1}, 400, t);
    std::exponential_distribution<double> e(1.0);
    double sum = 0;
    for (auto& p : ps.particles) sum += (p.weight = e(rng) * (t % 3 == 0 ? e(rng) * e(rng) : 1.0));
    for (auto& p : ps.particles) p.weight /= sum;
    const auto out = resample(ps, 500 + t);
    std::map<double, int> counts;
    for (const auto& p : out.particles) ++counts[p.pose.x];
    for (const auto& p : ps.particles) {
      const double expected = 400 * p.weight;
      const int got = counts.count(p.pose.x) ? counts[p.pose.x] : 0;
      ASSERT_LE(std::abs(got - expected), 1.0 + 1e-9);
    }
    EXPECT_NEAR(SumWeights(out), 1.0, 1e-9);
  }
}

TEST(Estimate, IdenticalParticles) {
  const auto ps = init_particles({3, 4, -1}, {0, 0, 0}, 200, 1);
  const auto e = estimate(ps);
  EXPECT_NEAR(e.pose.x, 3, 1e-12);
  EXPECT_NEAR(e.pose.theta, -1, 1e-12);
  for (double c : e.covariance_diag) EXPECT_NEAR(c, 0.0, 1e-20);
}

TEST(Estimate, CircularMeanAcrossPi) {
  ParticleSet ps;
  const double a = 170.0 * std::numbers::pi / 180;
  ps.particles = {{Pose2D{0, 0, a}, 0.5}, {Pose2D{0, 0, -a}, 0.5}};
  EXPECT_NEAR(std::abs(estimate(ps).pose.theta), std::numbers::pi, 1e-12);
}

TEST(Estimate, GaussianCloudMean) {
  const auto ps = init_particles({6, 1, 2.0}, {0.4, 0.4, 0.2}, 2000, 31, {200, 5000});
  const auto e = estimate(ps);
  EXPECT_LE(std::abs(e.pose.x - 6), 3 * 0.4 / std::sqrt(2000));
  EXPECT_LE(std::abs(e.pose.y - 1), 3 * 0.4 / std::sqrt(2000));
  EXPECT_LE(std::abs(e.pose.theta - 2.0), 3 * 0.2 / std::sqrt(2000));
}

// Closed loop against truth: operator error of 0.5 m / 20 deg, scripted
// forward-and-turn path, laser odometry between scans.
TEST(Amcl, ConvergesWithinTwentyCycles) {
  const auto w = testing::SampleWorld();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ua(-std::numbers::pi, std::numbers::pi), ux(0.5, 9.5);
  for (int trial = 0; trial < 8; ++trial) {
    Pose2D truth;
    do {
      truth = {ux(rng), ux(rng), ua(rng)};
    } while (!w.is_free(truth.position()));
    const double dir = ua(rng);
    const Pose2D est{truth.x + 0.5 * std::cos(dir), truth.y + 0.5 * std::sin(dir),
                     truth.theta + (trial % 2 ? 1 : -1) * 20 * std::numbers::pi / 180};
    Amcl amcl(AmclParams{}, SampleField(), {}, 1234 + trial);
    amcl.initialize(est);
    auto prev = sensing::raycast_scan(w, truth, {}, 9999);
    for (int c = 1; c <= 20; ++c) {
      Pose2D next = geom::compose(truth, Transform2D{0.025, 0, 0.02});
      if (!w.is_free(next.position())) next = geom::compose(truth, Transform2D{0, 0, 0.05});
      truth = next;
      const auto scan = sensing::raycast_scan(w, truth, {}, trial * 100 + c);
      const auto odom = sensing::laser_odometry(prev, scan, Transform2D::identity()).delta;
      prev = scan;
      amcl.on_scan(odom, scan);
      EXPECT_NEAR(amcl.particles().weight_sum(), 1.0, 1e-9);
      EXPECT_EQ(amcl.particles().size(), 1000u);
    }
    const auto err = geom::between(truth, amcl.estimate().pose);
    EXPECT_LE(err.translation.norm(), 0.1) << "trial " << trial;
    EXPECT_LE(std::abs(err.rotation), 5 * std::numbers::pi / 180) << "trial " << trial;
  }
}

TEST(Amcl, SameSeedSameParticles) {
  auto run = [] {
    const auto w = testing::SampleWorld();
    Amcl amcl(AmclParams{}, SampleField(), {}, 55);
    amcl.initialize({2.6, 2.4, 0.1});
    for (int c = 0; c < 5; ++c)
      amcl.on_scan(Transform2D{0.03, 0, 0}, sensing::raycast_scan(w, {2.5 + 0.03 * c, 2.5, 0}, {}, c));
    return amcl.particles();
  };
  const auto a = run(), b = run();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a.particles[i].pose.x, b.particles[i].pose.x);
    ASSERT_EQ(a.particles[i].weight, b.particles[i].weight);
  }
}

}  // namespace
}  // namespace dronav::localize
