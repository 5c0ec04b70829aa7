#include "dronav/localize/filter.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace dronav::localize {

const char* to_string(AmclStatus s) {
  switch (s) {
    case AmclStatus::kUninitialized: return "uninitialized";
    case AmclStatus::kUpdated: return "updated";
    case AmclStatus::kMotionOnly: return "motion_only";
    case AmclStatus::kNoInfo: return "no_info";
    case AmclStatus::kReinitialized: return "reinitialized";
  }
  return "unknown";
}

Amcl::Amcl(AmclParams params, LikelihoodField field, geom::Transform2D base_to_lidar, std::uint64_t seed)
    : params_(params), field_(std::move(field)), base_to_lidar_(base_to_lidar), seed_(seed) {}

std::uint64_t Amcl::next_seed() {
  // splitmix64 over a counter keeps every draw independent of call history length.
  std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * ++draws_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void Amcl::initialize(const geom::Pose2D& estimate) { initialize(estimate, params_.init_sigma); }

void Amcl::initialize(const geom::Pose2D& estimate, const std::array<double, 3>& sigma) {
  particles_ = init_particles(estimate, sigma, params_.particles, next_seed(), params_.limits);
  initialized_ = true;
  travel_d_ = travel_a_ = 0.0;
  forced_left_ = params_.forced_updates;
}

AmclTick Amcl::on_scan(const geom::Transform2D& base_delta, const sensing::LaserScan& scan) {
  AmclTick tick;
  if (!initialized_) return tick;
  motion_update(particles_, base_delta, params_.motion, next_seed());
  travel_d_ += base_delta.translation.norm();
  travel_a_ += std::abs(base_delta.rotation);
  tick.status = AmclStatus::kMotionOnly;
  if (travel_d_ < params_.update_min_d && travel_a_ < params_.update_min_a && forced_left_ <= 0) {
    tick.n_eff = effective_sample_size(particles_);
    return tick;
  }
  if (params_.roughen_xy > 0.0 || params_.roughen_theta > 0.0) {
    std::mt19937_64 rng(next_seed());
    std::normal_distribution<double> nxy(0.0, std::max(params_.roughen_xy, 1e-300));
    std::normal_distribution<double> nth(0.0, std::max(params_.roughen_theta, 1e-300));
    for (auto& p : particles_.particles) {
      const double jx = params_.roughen_xy > 0.0 ? nxy(rng) : 0.0;
      const double jy = params_.roughen_xy > 0.0 ? nxy(rng) : 0.0;
      const double jt = params_.roughen_theta > 0.0 ? nth(rng) : 0.0;
      p.pose = {p.pose.x + jx, p.pose.y + jy, p.pose.theta + jt};
    }
  }
  try {
    const auto st = measurement_update(particles_, scan, field_, params_.measurement, base_to_lidar_);
    if (st == MeasurementStatus::kNoInfo) {
      tick.status = AmclStatus::kNoInfo;
      tick.n_eff = effective_sample_size(particles_);
      return tick;
    }
    tick.status = AmclStatus::kUpdated;
    ++updates_;
  } catch (const AllZeroWeightError&) {
    particles_ = init_particles_global(field_, params_.particles, next_seed(), params_.limits);
    tick.status = AmclStatus::kReinitialized;
  }
  travel_d_ = travel_a_ = 0.0;
  if (forced_left_ > 0) --forced_left_;
  tick.n_eff = effective_sample_size(particles_);
  if (tick.n_eff < params_.resample_ratio * static_cast<double>(particles_.size())) {
    particles_ = resample(particles_, next_seed());
    tick.resampled = true;
  }
  return tick;
}

}  // namespace dronav::localize
