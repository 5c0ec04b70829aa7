#pragma once

#include <cstdint>

#include "dronav/localize/amcl.hpp"

namespace dronav::localize {

struct AmclParams {
  int particles = 1000;
  CountLimits limits;
  std::array<double, 3> init_sigma{0.5, 0.5, 0.35};  // m, m, rad
  MotionNoise motion;
  MeasurementModel measurement;
  double field_max_distance = 2.0;  // m
  double update_min_d = 0.02;       // m of travel between measurement updates
  double update_min_a = 0.03;       // rad of turn between measurement updates
  int forced_updates = 5;           // updates taken without motion right after initialization
  double resample_ratio = 0.5;      // resample when N_eff < ratio * N
  // Gaussian jitter added to every particle right before a measurement
  // update, so the cloud can follow sideways drift the odometry model
  // cannot express.
  double roughen_xy = 0.01;      // m
  double roughen_theta = 0.005;  // rad
};

enum class AmclStatus : std::uint8_t { kUninitialized, kUpdated, kMotionOnly, kNoInfo, kReinitialized };

const char* to_string(AmclStatus s);

struct AmclTick {
  AmclStatus status = AmclStatus::kUninitialized;
  bool resampled = false;
  double n_eff = 0.0;
};

/// Particle filter state advanced once per scan.
class Amcl {
 public:
  Amcl(AmclParams params, LikelihoodField field, geom::Transform2D base_to_lidar, std::uint64_t seed);

  /// Scatter particles around an operator estimate.
  void initialize(const geom::Pose2D& estimate);
  void initialize(const geom::Pose2D& estimate, const std::array<double, 3>& sigma);
  bool initialized() const { return initialized_; }

  /// `base_delta` is base_link motion since the previous scan.
  AmclTick on_scan(const geom::Transform2D& base_delta, const sensing::LaserScan& scan);

  PoseEstimate estimate() const { return localize::estimate(particles_); }
  const ParticleSet& particles() const { return particles_; }
  const AmclParams& params() const { return params_; }
  const LikelihoodField& field() const { return field_; }
  std::uint64_t updates() const { return updates_; }

 private:
  std::uint64_t next_seed();

  AmclParams params_;
  LikelihoodField field_;
  geom::Transform2D base_to_lidar_;
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  ParticleSet particles_;
  bool initialized_ = false;
  double travel_d_ = 0.0;
  double travel_a_ = 0.0;
  int forced_left_ = 0;
  std::uint64_t updates_ = 0;
};

}  // namespace dronav::localize
