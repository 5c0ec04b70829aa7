#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dronav/error.hpp"
#include "dronav/geom/transform.hpp"
#include "dronav/mapping/grid.hpp"
#include "dronav/sensing/lidar.hpp"

namespace dronav::localize {

class BadCountError : public Error {
  using Error::Error;
};

class AllZeroWeightError : public Error {
  using Error::Error;
};

struct Particle {
  geom::Pose2D pose;
  double weight = 0.0;
};

struct ParticleSet {
  std::vector<Particle> particles;
  bool normalized = false;

  std::size_t size() const { return particles.size(); }
  double weight_sum() const;
};

/// Odometry motion model noise (rot-trans-rot): a1 rotation from rotation,
/// a2 rotation from translation, a3 translation from translation, a4
/// translation from rotation.
struct MotionNoise {
  double a1 = 0.2, a2 = 0.2, a3 = 0.2, a4 = 0.2;
};

struct MeasurementModel {
  double z_hit = 0.95;
  double z_rand = 0.05;
  double sigma_hit = 0.1;  // m
  int subsample = 30;      // beams used per update
};

/// Distance from every map cell to the nearest occupied cell, capped at
/// `max_distance`. Points off the grid read as `max_distance`.
class LikelihoodField {
 public:
  LikelihoodField() = default;
  LikelihoodField(const mapping::OccupancyGrid& map, double max_distance = 2.0);

  const mapping::GridGeometry& geometry() const { return geo_; }
  double max_distance() const { return max_distance_; }
  double distance(geom::Vec2 p) const;
  double distance_at(mapping::CellIndex c) const { return dist_[geo_.index(c)]; }
  /// Indices of FREE map cells, row-major.
  const std::vector<std::size_t>& free_cells() const { return free_; }

 private:
  mapping::GridGeometry geo_;
  double max_distance_ = 2.0;
  std::vector<double> dist_;
  std::vector<std::size_t> free_;
};

struct CountLimits {
  int n_min = 200;
  int n_max = 5000;
};

/// `n` particles drawn from independent Gaussians around `estimate`, weights 1/n.
ParticleSet init_particles(const geom::Pose2D& estimate, const std::array<double, 3>& sigma, int n,
                           std::uint64_t seed, CountLimits limits = {});

/// `n` particles uniform over the free cells of the field's map, uniform heading.
ParticleSet init_particles_global(const LikelihoodField& field, int n, std::uint64_t seed,
                                  CountLimits limits = {});

/// Apply base-frame motion `delta` to every particle with sampled odometry noise.
void motion_update(ParticleSet& ps, const geom::Transform2D& delta, const MotionNoise& noise,
                   std::uint64_t seed);

enum class MeasurementStatus : std::uint8_t { kUpdated, kNoInfo };

/// Likelihood-field update in the log domain, then normalization.
/// `base_to_lidar` places the sensor on each particle.
MeasurementStatus measurement_update(ParticleSet& ps, const sensing::LaserScan& scan,
                                     const LikelihoodField& field, const MeasurementModel& model = {},
                                     const geom::Transform2D& base_to_lidar = {});

double effective_sample_size(const ParticleSet& ps);

/// Low-variance systematic resampling; output weights are uniform.
ParticleSet resample(const ParticleSet& ps, std::uint64_t seed);

struct PoseEstimate {
  geom::Pose2D pose;
  std::array<double, 3> covariance_diag{};
};

PoseEstimate estimate(const ParticleSet& ps);

}  // namespace dronav::localize
