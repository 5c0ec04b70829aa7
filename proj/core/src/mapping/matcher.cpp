#include "dronav/mapping/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

namespace dronav::mapping {

namespace {
std::string low_score_message(double s) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "scan match score %.3f below threshold", s);
  return buf;
}
// Occupancy probability at cell centres, bilinearly interpolated, with its
// spatial gradient.
struct Surface {
  const LogOddsGrid& grid;

  double prob(int x, int y) const {
    const CellIndex c{x, y};
    if (!grid.geometry().contains(c)) return 0.5;
    return 1.0 / (1.0 + std::exp(-grid.at(c)));
  }

  double sample(geom::Vec2 p, double& gx, double& gy) const {
    const GridGeometry& g = grid.geometry();
    const double fx = (p.x - g.origin.x) / g.resolution - 0.5;
    const double fy = (p.y - g.origin.y) / g.resolution - 0.5;
    const int x0 = static_cast<int>(std::floor(fx)), y0 = static_cast<int>(std::floor(fy));
    const double tx = fx - x0, ty = fy - y0;
    const double m00 = prob(x0, y0), m10 = prob(x0 + 1, y0), m01 = prob(x0, y0 + 1),
                 m11 = prob(x0 + 1, y0 + 1);
    gx = ((m10 - m00) * (1 - ty) + (m11 - m01) * ty) / g.resolution;
    gy = ((m01 - m00) * (1 - tx) + (m11 - m10) * tx) / g.resolution;
    return (m00 * (1 - tx) + m10 * tx) * (1 - ty) + (m01 * (1 - tx) + m11 * tx) * ty;
  }
};

double surface_cost(const Surface& m, const std::vector<geom::Vec2>& local, const geom::Pose2D& pose) {
  const double c = std::cos(pose.theta), s = std::sin(pose.theta);
  double cost = 0.0, gx, gy;
  for (const auto& q : local) {
    const double r = 1.0 - m.sample({pose.x + c * q.x - s * q.y, pose.y + s * q.x + c * q.y}, gx, gy);
    cost += r * r;
  }
  return cost;
}

// Gauss-Newton on sum (1 - M(T p))^2, confined to the box `lo`..`hi`.
geom::Pose2D refine(const LogOddsGrid& grid, const std::vector<geom::Vec2>& local, geom::Pose2D pose,
                    const geom::Pose2D& lo, const geom::Pose2D& hi) {
  const Surface m{grid};
  double cost = surface_cost(m, local, pose);
  for (int iter = 0; iter < 10; ++iter) {
    const double c = std::cos(pose.theta), s = std::sin(pose.theta);
    double h[3][3] = {}, b[3] = {};
    for (const auto& q : local) {
      double gx, gy;
      const double val = m.sample({pose.x + c * q.x - s * q.y, pose.y + s * q.x + c * q.y}, gx, gy);
      const double r = 1.0 - val;
      const double j[3] = {gx, gy, gx * (-s * q.x - c * q.y) + gy * (c * q.x - s * q.y)};
      for (int a = 0; a < 3; ++a) {
        b[a] += j[a] * r;
        for (int k = 0; k < 3; ++k) h[a][k] += j[a] * j[k];
      }
    }
    for (int a = 0; a < 3; ++a) h[a][a] += 1e-9 + 1e-3 * h[a][a];
    // Solve h * d = b by Cramer's rule.
    const double det = h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1]) -
                       h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0]) +
                       h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0]);
    if (!(std::abs(det) > 1e-30)) break;
    auto solve_col = [&](int col) {
      double m3[3][3];
      for (int a = 0; a < 3; ++a)
        for (int k = 0; k < 3; ++k) m3[a][k] = k == col ? b[a] : h[a][k];
      return (m3[0][0] * (m3[1][1] * m3[2][2] - m3[1][2] * m3[2][1]) -
              m3[0][1] * (m3[1][0] * m3[2][2] - m3[1][2] * m3[2][0]) +
              m3[0][2] * (m3[1][0] * m3[2][1] - m3[1][1] * m3[2][0])) /
             det;
    };
    geom::Pose2D next{std::clamp(pose.x + solve_col(0), lo.x, hi.x),
                      std::clamp(pose.y + solve_col(1), lo.y, hi.y),
                      std::clamp(pose.theta + solve_col(2), lo.theta, hi.theta)};
    const double next_cost = surface_cost(m, local, next);
    if (!(next_cost < cost)) break;
    const bool small = std::abs(next.x - pose.x) < 1e-5 && std::abs(next.y - pose.y) < 1e-5 &&
                       std::abs(next.theta - pose.theta) < 1e-6;
    pose = next;
    cost = next_cost;
    if (small) break;
  }
  return pose;
}

}  // namespace

LowScoreError::LowScoreError(double best_score) : Error(low_score_message(best_score)), best_(best_score) {}

MatchResult match_scan_to_map(const LogOddsGrid& grid, const sensing::LaserScan& scan,
                              const geom::Pose2D& initial, const SearchWindow& window,
                              double min_score) {
  const GridGeometry& g = grid.geometry();
  const int nx = static_cast<int>(std::floor(window.dx / g.resolution + 1e-9));
  const int ny = static_cast<int>(std::floor(window.dy / g.resolution + 1e-9));
  const int nt = window.angular_step > 0.0
                     ? static_cast<int>(std::floor(window.dtheta / window.angular_step + 1e-9))
                     : 0;

  std::vector<geom::Vec2> local;
  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double r = scan.ranges[i];
    if (!sensing::LaserScan::is_return(r)) continue;
    const double a = scan.spec.beam_angle(static_cast<int>(i));
    local.push_back({r * std::cos(a), r * std::sin(a)});
  }
  if (local.empty() || !grid.has_occupied_mass()) throw LowScoreError(0.0);

  const double inv_n = 1.0 / static_cast<double>(local.size());
  int best_count = -1, best_i = 0, best_j = 0, best_k = 0;
  auto better = [&](int count, int i, int j, int k) {
    if (count != best_count) return count > best_count;
    const int d_new = i * i + j * j, d_old = best_i * best_i + best_j * best_j;
    if (d_new != d_old) return d_new < d_old;
    return std::abs(k) < std::abs(best_k);
  };

  std::vector<CellIndex> base(local.size());
  for (int k = -nt; k <= nt; ++k) {
    const double th = initial.theta + k * window.angular_step;
    const double c = std::cos(th), s = std::sin(th);
    for (std::size_t p = 0; p < local.size(); ++p) {
      const geom::Vec2 w{initial.x + c * local[p].x - s * local[p].y,
                         initial.y + s * local[p].x + c * local[p].y};
      base[p] = g.cell_of(w);
    }
    for (int j = -ny; j <= ny; ++j) {
      for (int i = -nx; i <= nx; ++i) {
        int count = 0;
        for (const CellIndex b : base) {
          const CellIndex cell{b.x + i, b.y + j};
          if (g.contains(cell) && grid.at(cell) > 0.0) ++count;
        }
        if (better(count, i, j, k)) {
          best_count = count;
          best_i = i;
          best_j = j;
          best_k = k;
        }
      }
    }
  }

  MatchResult out;
  out.score = best_count * inv_n;
  if (out.score < min_score) throw LowScoreError(out.score);
  // Keep theta unwrapped until the end so the box bounds stay valid.
  geom::Pose2D best;
  best.x = initial.x + best_i * g.resolution;
  best.y = initial.y + best_j * g.resolution;
  best.theta = initial.theta + best_k * window.angular_step;
  if (window.subcell_refine) {
    geom::Pose2D lo, hi;
    lo.x = std::max(best.x - g.resolution, initial.x - window.dx);
    hi.x = std::min(best.x + g.resolution, initial.x + window.dx);
    lo.y = std::max(best.y - g.resolution, initial.y - window.dy);
    hi.y = std::min(best.y + g.resolution, initial.y + window.dy);
    lo.theta = std::max(best.theta - window.angular_step, initial.theta - window.dtheta);
    hi.theta = std::min(best.theta + window.angular_step, initial.theta + window.dtheta);
    best = refine(grid, local, best, lo, hi);
  }
  out.pose = {best.x, best.y, best.theta};
  out.converged = std::abs(best_i) < nx && std::abs(best_j) < ny && std::abs(best_k) < nt;
  return out;
}

}  // namespace dronav::mapping
