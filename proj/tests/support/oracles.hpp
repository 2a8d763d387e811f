#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. They avoid the library's own fast paths on purpose.

#include <cmath>
#include <cstdint>
#include <vector>

#include "raceline/geometry.hpp"
#include "raceline/track.hpp"
#include "raceline/trajectory.hpp"
#include "raceline/vehicle.hpp"

namespace raceline::oracle {

/// Direct Bernstein-basis sum.
inline Point2 bernstein_eval(const std::vector<Point2>& cp, double t) {
  const int n = static_cast<int>(cp.size()) - 1;
  Point2 out{0.0, 0.0};
  double binom = 1.0;
  for (int i = 0; i <= n; ++i) {
    if (i > 0) binom = binom * (n - i + 1) / i;
    const double w = binom * std::pow(1.0 - t, n - i) * std::pow(t, i);
    out = out + w * cp[static_cast<std::size_t>(i)];
  }
  return out;
}

/// Cell lookup by plain rounding; out of range is off-track.
inline bool cell_lookup(const OccupancyGrid& grid, Point2 p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  if (p.x < -0.5 || p.y < -0.5) return false;
  const long c = std::lround(p.x);
  const long r = std::lround(p.y);
  if (r >= grid.rows() || c >= grid.cols()) return false;
  return grid.cells()[static_cast<std::size_t>(r) * static_cast<std::size_t>(grid.cols()) +
                      static_cast<std::size_t>(c)] != 0;
}

/// Brute-force ray marcher: uncapped distance theta to the first off-track
/// sample along the ray, in increments of `step` px. Returns infinity when
/// nothing is hit within `limit`.
inline double march_ray(const OccupancyGrid& grid, Point2 origin, double angle, double limit, double step = 0.05) {
  if (!cell_lookup(grid, origin)) return 0.0;
  const Point2 dir{std::cos(angle), std::sin(angle)};
  for (int i = 1;; ++i) {
    const double t = i * step;
    if (t > limit) return INFINITY;
    if (!cell_lookup(grid, origin + t * dir)) return t;
  }
}

/// Every embedding sample lies in a drivable cell of `grid`.
inline bool embedding_contained(const OccupancyGrid& grid, const BicycleState& frame, const std::vector<double>& xs,
                                double y_step) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Point2 w = to_world_frame(frame, {xs[i], static_cast<double>(i + 1) * y_step});
    if (!cell_lookup(grid, w)) return false;
  }
  return true;
}

/// Uniform on-track pose sampler driven by a simple LCG so the oracle does
/// not share RNG code with the library.
class PoseSampler {
 public:
  explicit PoseSampler(std::uint64_t seed) : state_(seed * 2862933555777941757ULL + 3037000493ULL) {}

  double uniform() {
    state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(state_ >> 11) * 0x1.0p-53;
  }

  BicycleState on_track(const OccupancyGrid& grid) {
    while (true) {
      BicycleState s;
      s.x = uniform() * (grid.cols() - 1);
      s.y = uniform() * (grid.rows() - 1);
      s.yaw = (uniform() * 2.0 - 1.0) * 3.141592653589793;
      if (cell_lookup(grid, s.position())) return s;
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace raceline::oracle
