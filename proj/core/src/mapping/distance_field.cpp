#include "dronav/mapping/distance_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dronav::mapping {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform by lower envelope of parabolas
// (Felzenszwalb & Huttenlocher). `f` holds squared costs, kInf for none.
void squared_dt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                   std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // Only reachable for k == 0: the new parabola dominates everywhere.
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

std::vector<double> distance_transform(const std::vector<char>& seeds, int width, int height) {
  const std::size_t w = static_cast<std::size_t>(width), h = static_cast<std::size_t>(height);
  std::vector<double> grid(w * h);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = seeds[i] ? 0.0 : kInf;

  const std::size_t n = std::max(w, h);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);

  f.resize(h);
  d.resize(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) f[y] = grid[y * w + x];
    squared_dt_1d(f, d, v, z);
    for (std::size_t y = 0; y < h; ++y) grid[y * w + x] = d[y];
  }
  f.resize(w);
  d.resize(w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) f[x] = grid[y * w + x];
    squared_dt_1d(f, d, v, z);
    for (std::size_t x = 0; x < w; ++x) grid[y * w + x] = std::sqrt(d[x]);
  }
  return grid;
}

}  // namespace dronav::mapping
