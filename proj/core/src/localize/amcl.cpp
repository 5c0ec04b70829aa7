#include "dronav/localize/amcl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "dronav/mapping/distance_field.hpp"

namespace dronav::localize {

namespace {

void check_count(int n, CountLimits limits) {
  if (n < limits.n_min || n > limits.n_max)
    throw BadCountError("particle count " + std::to_string(n) + " outside [" + std::to_string(limits.n_min) +
                        ", " + std::to_string(limits.n_max) + "]");
}

double sample_normal(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

}  // namespace

double ParticleSet::weight_sum() const {
  double s = 0.0;
  for (const auto& p : particles) s += p.weight;
  return s;
}

LikelihoodField::LikelihoodField(const mapping::OccupancyGrid& map, double max_distance)
    : geo_(map.geometry), max_distance_(max_distance) {
  std::vector<char> seeds(map.cells.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    seeds[i] = map.cells[i] == mapping::CellState::kOccupied;
    if (map.cells[i] == mapping::CellState::kFree) free_.push_back(i);
  }
  dist_ = mapping::distance_transform(seeds, geo_.width, geo_.height);
  for (double& d : dist_) d = std::min(d * geo_.resolution, max_distance_);
}

double LikelihoodField::distance(geom::Vec2 p) const {
  const mapping::CellIndex c = geo_.cell_of(p);
  return geo_.contains(c) ? dist_[geo_.index(c)] : max_distance_;
}

ParticleSet init_particles(const geom::Pose2D& estimate, const std::array<double, 3>& sigma, int n,
                           std::uint64_t seed, CountLimits limits) {
  check_count(n, limits);
  std::mt19937_64 rng(seed);
  ParticleSet ps;
  ps.particles.resize(static_cast<std::size_t>(n));
  for (auto& p : ps.particles) {
    const double dx = sample_normal(rng, sigma[0]);
    const double dy = sample_normal(rng, sigma[1]);
    const double dt = sample_normal(rng, sigma[2]);
    p.pose = {estimate.x + dx, estimate.y + dy, estimate.theta + dt};
    p.weight = 1.0 / n;
  }
  ps.normalized = true;
  return ps;
}

ParticleSet init_particles_global(const LikelihoodField& field, int n, std::uint64_t seed, CountLimits limits) {
  check_count(n, limits);
  if (field.free_cells().empty()) throw Error("map has no free cells for global initialization");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, field.free_cells().size() - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& g = field.geometry();
  ParticleSet ps;
  ps.particles.resize(static_cast<std::size_t>(n));
  for (auto& p : ps.particles) {
    const std::size_t idx = field.free_cells()[pick(rng)];
    const double x = g.origin.x + (static_cast<double>(idx % g.width) + u(rng)) * g.resolution;
    const double y = g.origin.y + (static_cast<double>(idx / g.width) + u(rng)) * g.resolution;
    p.pose = {x, y, (2.0 * u(rng) - 1.0) * std::numbers::pi};
    p.weight = 1.0 / n;
  }
  ps.normalized = true;
  return ps;
}

void motion_update(ParticleSet& ps, const geom::Transform2D& delta, const MotionNoise& noise, std::uint64_t seed) {
  const double dx = delta.translation.x, dy = delta.translation.y;
  const double trans = std::hypot(dx, dy);
  const double rot1 = trans < 0.01 ? 0.0 : std::atan2(dy, dx);
  const double rot2 = geom::angle_diff(delta.rotation, rot1);
  // Driving backwards should not look like a half turn.
  const double rot1_n = std::min(std::abs(rot1), std::abs(geom::angle_diff(std::numbers::pi, rot1)));
  const double rot2_n = std::min(std::abs(rot2), std::abs(geom::angle_diff(std::numbers::pi, rot2)));
  const double s_rot1 = std::sqrt(noise.a1 * rot1_n * rot1_n + noise.a2 * trans * trans);
  const double s_trans = std::sqrt(noise.a3 * trans * trans + noise.a4 * (rot1_n * rot1_n + rot2_n * rot2_n));
  const double s_rot2 = std::sqrt(noise.a1 * rot2_n * rot2_n + noise.a2 * trans * trans);
  std::mt19937_64 rng(seed);
  for (auto& p : ps.particles) {
    const double r1 = rot1 - sample_normal(rng, s_rot1);
    const double t = trans - sample_normal(rng, s_trans);
    const double r2 = rot2 - sample_normal(rng, s_rot2);
    if (s_rot1 == 0.0 && s_trans == 0.0 && s_rot2 == 0.0) {
      p.pose = geom::compose(p.pose, delta);
      continue;
    }
    const double heading = p.pose.theta + r1;
    p.pose = {p.pose.x + t * std::cos(heading), p.pose.y + t * std::sin(heading), heading + r2};
  }
}

MeasurementStatus measurement_update(ParticleSet& ps, const sensing::LaserScan& scan, const LikelihoodField& field,
                                     const MeasurementModel& model, const geom::Transform2D& base_to_lidar) {
  std::vector<int> finite;
  for (int i = 0; i < static_cast<int>(scan.ranges.size()); ++i)
    if (sensing::LaserScan::is_return(scan.ranges[i])) finite.push_back(i);
  if (finite.empty() || ps.particles.empty()) return MeasurementStatus::kNoInfo;

  const int m = static_cast<int>(finite.size());
  const int k = std::min(model.subsample, m);
  std::vector<geom::Vec2> local(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const int i = finite[static_cast<std::size_t>(static_cast<long>(j) * m / k)];
    const double a = scan.spec.beam_angle(i);
    local[static_cast<std::size_t>(j)] =
        base_to_lidar.apply({scan.ranges[i] * std::cos(a), scan.ranges[i] * std::sin(a)});
  }

  const double norm = 1.0 / (model.sigma_hit * std::sqrt(2.0 * std::numbers::pi));
  const double rand_term = model.z_rand / scan.spec.range_max;
  const double inv_2s2 = 1.0 / (2.0 * model.sigma_hit * model.sigma_hit);

  std::vector<double> logw(ps.particles.size());
  double max_logw = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < ps.particles.size(); ++n) {
    const auto& p = ps.particles[n];
    const double c = std::cos(p.pose.theta), s = std::sin(p.pose.theta);
    double ll = 0.0;
    for (const auto& q : local) {
      const double d = field.distance({p.pose.x + c * q.x - s * q.y, p.pose.y + s * q.x + c * q.y});
      ll += std::log(model.z_hit * norm * std::exp(-d * d * inv_2s2) + rand_term);
    }
    logw[n] = p.weight > 0.0 ? std::log(p.weight) + ll : -std::numeric_limits<double>::infinity();
    max_logw = std::max(max_logw, logw[n]);
  }
  if (!std::isfinite(max_logw)) throw AllZeroWeightError("all particle weights are zero");

  double sum = 0.0;
  for (std::size_t n = 0; n < ps.particles.size(); ++n) {
    ps.particles[n].weight = std::exp(logw[n] - max_logw);
    sum += ps.particles[n].weight;
  }
  for (auto& p : ps.particles) p.weight /= sum;
  ps.normalized = true;
  return MeasurementStatus::kUpdated;
}

double effective_sample_size(const ParticleSet& ps) {
  double s2 = 0.0;
  for (const auto& p : ps.particles) s2 += p.weight * p.weight;
  return s2 > 0.0 ? 1.0 / s2 : 0.0;
}

ParticleSet resample(const ParticleSet& ps, std::uint64_t seed) {
  const std::size_t n = ps.particles.size();
  ParticleSet out;
  out.particles.reserve(n);
  if (n == 0) return out;
  std::mt19937_64 rng(seed);
  const double step = 1.0 / static_cast<double>(n);
  const double start = std::uniform_real_distribution<double>(0.0, step)(rng);
  double cumulative = ps.particles[0].weight;
  std::size_t i = 0;
  for (std::size_t m = 0; m < n; ++m) {
    const double target = start + static_cast<double>(m) * step;
    while (target > cumulative && i + 1 < n) cumulative += ps.particles[++i].weight;
    out.particles.push_back({ps.particles[i].pose, step});
  }
  out.normalized = true;
  return out;
}

PoseEstimate estimate(const ParticleSet& ps) {
  PoseEstimate out;
  double sw = 0.0, mx = 0.0, my = 0.0, sc = 0.0, ss = 0.0;
  for (const auto& p : ps.particles) {
    sw += p.weight;
    mx += p.weight * p.pose.x;
    my += p.weight * p.pose.y;
    sc += p.weight * std::cos(p.pose.theta);
    ss += p.weight * std::sin(p.pose.theta);
  }
  if (!(sw > 0.0)) return out;
  mx /= sw;
  my /= sw;
  const double mt = std::atan2(ss, sc);
  double vx = 0.0, vy = 0.0, vt = 0.0;
  for (const auto& p : ps.particles) {
    vx += p.weight * (p.pose.x - mx) * (p.pose.x - mx);
    vy += p.weight * (p.pose.y - my) * (p.pose.y - my);
    const double dt = geom::angle_diff(p.pose.theta, mt);
    vt += p.weight * dt * dt;
  }
  out.pose = {mx, my, mt};
  out.covariance_diag = {vx / sw, vy / sw, vt / sw};
  return out;
}

}  // namespace dronav::localize
