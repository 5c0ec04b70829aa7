#include "dronav/sensing/laser_odometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>
#include <vector>

namespace dronav::sensing {

namespace {

class BucketGrid {
 public:
  BucketGrid(const std::vector<geom::Vec2>& pts, double cell) : pts_(pts), cell_(cell) {
    for (std::size_t i = 0; i < pts.size(); ++i) buckets_[key(cell_of(pts[i].x), cell_of(pts[i].y))].push_back(i);
  }

  /// Index of the nearest point within `cutoff`, or -1.
  long nearest(geom::Vec2 q, double cutoff) const {
    const long cx = cell_of(q.x), cy = cell_of(q.y);
    long best = -1;
    double best_d2 = cutoff * cutoff;
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        auto it = buckets_.find(key(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (std::size_t i : it->second) {
          const geom::Vec2 d = pts_[i] - q;
          const double d2 = d.dot(d);
          if (d2 < best_d2 || (d2 == best_d2 && static_cast<long>(i) < best)) {
            best_d2 = d2;
            best = static_cast<long>(i);
          }
        }
      }
    }
    return best;
  }

 private:
  const std::vector<geom::Vec2>& pts_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets_;

  long cell_of(double v) const { return static_cast<long>(std::floor(v / cell_)); }
  static std::int64_t key(long x, long y) { return (static_cast<std::int64_t>(x) << 32) ^ (y & 0xffffffff); }
};

// Reference points with straight-line fill between neighbouring returns that
// are closer than `max_gap`, so sparse beam sampling does not bias the fit.
std::vector<geom::Vec2> densified_points(const LaserScan& scan, double spacing, double max_gap) {
  std::vector<geom::Vec2> out;
  const int n = static_cast<int>(scan.ranges.size());
  auto point = [&](int i) {
    const double a = scan.spec.beam_angle(i);
    return geom::Vec2{scan.ranges[i] * std::cos(a), scan.ranges[i] * std::sin(a)};
  };
  const bool wraps = scan.spec.angle_max - scan.spec.angle_min + scan.spec.angle_increment() >=
                     2.0 * std::numbers::pi - 1e-9;
  for (int i = 0; i < n; ++i) {
    if (!LaserScan::is_return(scan.ranges[i])) continue;
    const geom::Vec2 a = point(i);
    out.push_back(a);
    const int j = i + 1 < n ? i + 1 : (wraps ? 0 : -1);
    if (j < 0 || !LaserScan::is_return(scan.ranges[j])) continue;
    const geom::Vec2 b = point(j);
    const double gap = (b - a).norm();
    if (gap >= max_gap) continue;
    const int steps = static_cast<int>(std::ceil(gap / spacing));
    for (int k = 1; k < steps; ++k) {
      const double f = static_cast<double>(k) / steps;
      out.push_back(a + f * (b - a));
    }
  }
  return out;
}

}  // namespace

OdometryDelta laser_odometry(const LaserScan& prev, const LaserScan& cur,
                             const geom::Transform2D& guess, const IcpParams& params) {
  if (prev.spec.num_beams != cur.spec.num_beams || prev.ranges.size() != cur.ranges.size()) {
    throw Error("laser_odometry: scans do not share a LidarSpec");
  }
  if (prev.finite_count() < params.min_returns || cur.finite_count() < params.min_returns) {
    throw DegenerateScanError("fewer than " + std::to_string(params.min_returns) +
                              " returns in a scan");
  }
  const std::vector<geom::Vec2> ref =
      densified_points(prev, params.densify_spacing, params.densify_max_gap);
  const std::vector<geom::Vec2> src = cur.points();
  const BucketGrid grid(ref, params.correspondence_cutoff);

  OdometryDelta out;
  geom::Transform2D T = guess;
  bool converged = false;
  double sum_sq = 0.0, sum_r2 = 0.0;
  int pairs = 0;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    out.iterations = iter + 1;
    std::vector<geom::Vec2> p, q;
    p.reserve(src.size());
    q.reserve(src.size());
    for (const geom::Vec2& s : src) {
      const geom::Vec2 moved = T.apply(s);
      const long j = grid.nearest(moved, params.correspondence_cutoff);
      if (j < 0) continue;
      p.push_back(moved);
      q.push_back(ref[static_cast<std::size_t>(j)]);
    }
    pairs = static_cast<int>(p.size());
    if (pairs < 3) break;

    geom::Vec2 pm, qm;
    for (int i = 0; i < pairs; ++i) {
      pm = pm + p[i];
      qm = qm + q[i];
    }
    pm = (1.0 / pairs) * pm;
    qm = (1.0 / pairs) * qm;
    double sxx = 0, sxy = 0, syx = 0, syy = 0;
    for (int i = 0; i < pairs; ++i) {
      const geom::Vec2 a = p[i] - pm, b = q[i] - qm;
      sxx += a.x * b.x;
      sxy += a.x * b.y;
      syx += a.y * b.x;
      syy += a.y * b.y;
    }
    const double dth = std::atan2(sxy - syx, sxx + syy);
    const double c = std::cos(dth), s = std::sin(dth);
    const geom::Vec2 rp{c * pm.x - s * pm.y, s * pm.x + c * pm.y};
    const geom::Transform2D step{qm.x - rp.x, qm.y - rp.y, dth};
    T = geom::compose(step, T);

    sum_sq = 0.0;
    sum_r2 = 0.0;
    for (int i = 0; i < pairs; ++i) {
      const geom::Vec2 r = step.apply(p[i]) - q[i];
      sum_sq += r.dot(r);
      sum_r2 += (p[i] - pm).dot(p[i] - pm);
    }
    if (step.translation.norm() < params.convergence && std::abs(dth) < params.convergence) {
      converged = true;
      break;
    }
  }

  out.delta = T;
  out.correspondences = pairs;
  const double mse = pairs > 0 ? sum_sq / pairs : std::numeric_limits<double>::infinity();
  out.rms_residual = std::sqrt(mse);
  const double n = std::max(pairs, 1);
  out.covariance_diag = {mse / n, mse / n, sum_r2 > 0.0 ? mse / sum_r2 : mse};
  out.degraded = !converged || pairs < params.min_returns;
  return out;
}

}  // namespace dronav::sensing
