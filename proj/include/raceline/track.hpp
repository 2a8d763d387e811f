#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "raceline/geometry.hpp"

namespace raceline {

/// Smallest admissible track width: twice the vehicle half-width (1 px).
inline constexpr double kMinTrackWidth = 2.0;

struct TrackParams {
  int n_knots = 12;
  int rows = 512;
  int cols = 512;
  double width = 60.0;
  double jitter = 0.25;  // fraction of the ellipse radius
  double px_per_meter = 10.0;
};

/// Constant-width track around a Catmull-Rom spline through `centerline`.
/// For closed tracks the last knot repeats the first.
struct TrackSpec {
  std::vector<Point2> centerline;
  double width = 60.0;
  int rows = 512;
  int cols = 512;
  std::uint64_t seed = 0;
  bool closed = true;
  double px_per_meter = 10.0;

  friend bool operator==(const TrackSpec&, const TrackSpec&) = default;
};

/// Throws DomainError when the spec breaks its invariants.
void validate(const TrackSpec& spec);

/// Binarized raster, row-major, row 0 at the top. Cell (r, c) has its center
/// at world point (c, r). Immutable after construction.
class OccupancyGrid {
 public:
  OccupancyGrid(int rows, int cols, std::vector<std::uint8_t> cells, double px_per_meter = 10.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double px_per_meter() const { return px_per_meter_; }
  std::span<const std::uint8_t> cells() const { return cells_; }

  bool at(int row, int col) const { return cells_[static_cast<std::size_t>(row) * cols_ + col] != 0; }
  bool in_bounds(int row, int col) const { return row >= 0 && col >= 0 && row < rows_ && col < cols_; }

  /// Chessboard distance (in cells) from each cell to the nearest off-track
  /// cell, counting everything outside the grid as off-track. Zero for
  /// off-track cells.
  std::span<const std::uint16_t> clearance() const { return clearance_; }

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  int rows_;
  int cols_;
  double px_per_meter_;
  std::vector<std::uint8_t> cells_;
  std::vector<std::uint16_t> clearance_;
};

/// Cubic Bezier segments of the centerline spline (C1 Catmull-Rom).
std::vector<BezierCurve> centerline_segments(const TrackSpec& spec);

/// Dense polyline along the centerline with cumulative arc length.
class Centerline {
 public:
  /// Samples every segment so that consecutive points are at most
  /// `max_spacing` px apart (estimated from the control polygon).
  Centerline(const TrackSpec& spec, double max_spacing);

  const std::vector<Point2>& points() const { return points_; }
  const std::vector<double>& arc() const { return arc_; }
  double length() const { return arc_.back(); }
  bool closed() const { return closed_; }

  /// Point at arc length s (wrapped for closed tracks, clamped otherwise).
  Point2 point_at(double s) const;
  /// Unit tangent heading (radians, grid frame) at arc length s.
  double heading_at(double s) const;
  /// Arc length of the sample nearest to p.
  double project(Point2 p) const;

 private:
  std::size_t index_at(double s) const;

  std::vector<Point2> points_;
  std::vector<double> arc_;
  bool closed_;
};

/// Deterministic jittered-ellipse track. Retries up to 100 times with fresh
/// jitter; throws GenerationError when no attempt is feasible.
TrackSpec generate_track(std::uint64_t seed, const TrackParams& params);

/// Cell is drivable iff its center lies within width/2 of the centerline.
OccupancyGrid rasterize(const TrackSpec& spec);

/// True iff p rounds to an in-bounds drivable cell.
bool is_on_track(const OccupancyGrid& grid, Point2 p);

/// Smallest radius of curvature along the spline.
double min_turning_radius(const TrackSpec& spec);

/// Smallest distance between a centerline sample and a centerline segment
/// more than `adjacency` px of arc away (loop-wrapped).
double min_nonadjacent_clearance(const TrackSpec& spec, double adjacency);

/// Arc window treated as "adjacent" by the self-pinch check.
double pinch_adjacency(double width);

}  // namespace raceline
