#include "raceline/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "raceline/errors.hpp"

namespace raceline {

namespace {

constexpr int kMaxAttempts = 100;
constexpr double kRasterSamplesPerPx = 8.0;
constexpr int kCurvatureSamplesPerSegment = 64;
constexpr double kPinchSpacing = 2.0;

double control_polygon_length(const BezierCurve& c) {
  const auto& cp = c.control_points();
  double len = 0.0;
  for (std::size_t i = 1; i < cp.size(); ++i) len += distance(cp[i], cp[i - 1]);
  return len;
}

std::vector<Point2> sample_segments(const std::vector<BezierCurve>& segments, double max_spacing) {
  std::vector<Point2> out;
  for (const auto& seg : segments) {
    const int n = std::max(1, static_cast<int>(std::ceil(control_polygon_length(seg) / max_spacing)));
    for (int i = 0; i < n; ++i) out.push_back(bezier_eval(seg, static_cast<double>(i) / n));
  }
  out.push_back(segments.back().control_points().back());
  return out;
}

}  // namespace

void validate(const TrackSpec& spec) {
  if (!(spec.width >= kMinTrackWidth) || !std::isfinite(spec.width)) {
    throw DomainError("track width must be finite and >= twice the vehicle half-width");
  }
  if (spec.rows <= 0 || spec.cols <= 0) throw DomainError("grid size must be positive");
  if (!(spec.px_per_meter > 0.0)) throw DomainError("px_per_meter must be positive");
  if (spec.centerline.size() < 2) throw DomainError("centerline needs at least 2 knots");
  for (const auto& p : spec.centerline) {
    if (!p.finite()) throw DomainError("centerline knots must be finite");
  }
  if (spec.closed) {
    if (spec.centerline.size() < 4) throw DomainError("closed centerline needs at least 3 distinct knots");
    if (!(spec.centerline.front() == spec.centerline.back())) {
      throw DomainError("closed centerline must end at its first knot");
    }
  }
}

OccupancyGrid::OccupancyGrid(int rows, int cols, std::vector<std::uint8_t> cells, double px_per_meter)
    : rows_(rows), cols_(cols), px_per_meter_(px_per_meter), cells_(std::move(cells)) {
  if (rows_ <= 0 || cols_ <= 0) throw DomainError("OccupancyGrid: non-positive size");
  if (cells_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_)) {
    throw DomainError("OccupancyGrid: cell count does not match rows x cols");
  }
  if (!(px_per_meter_ > 0.0)) throw DomainError("OccupancyGrid: px_per_meter must be positive");
  if (std::none_of(cells_.begin(), cells_.end(), [](std::uint8_t c) { return c != 0; })) {
    throw DomainError("OccupancyGrid: no drivable cell");
  }
  for (auto& c : cells_) c = c != 0 ? 1 : 0;

  // Two-pass chessboard distance transform; neighbours outside the grid
  // count as off-track.
  constexpr int kInf = 0xFFFF;
  const auto idx = [this](int r, int c) { return static_cast<std::size_t>(r) * cols_ + c; };
  std::vector<int> d(cells_.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = cells_[i] != 0 ? kInf : 0;
  const auto at = [&](int r, int c) { return in_bounds(r, c) ? d[idx(r, c)] : 0; };
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) {
      int& v = d[idx(r, c)];
      if (v == 0) continue;
      v = std::min({v, at(r - 1, c - 1) + 1, at(r - 1, c) + 1, at(r - 1, c + 1) + 1, at(r, c - 1) + 1});
    }
  }
  for (int r = rows_ - 1; r >= 0; --r) {
    for (int c = cols_ - 1; c >= 0; --c) {
      int& v = d[idx(r, c)];
      if (v == 0) continue;
      v = std::min({v, at(r + 1, c + 1) + 1, at(r + 1, c) + 1, at(r + 1, c - 1) + 1, at(r, c + 1) + 1});
    }
  }
  clearance_.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) clearance_[i] = static_cast<std::uint16_t>(std::min(d[i], kInf));
}

std::vector<BezierCurve> centerline_segments(const TrackSpec& spec) {
  validate(spec);
  // Knots without the closing duplicate.
  std::vector<Point2> k(spec.centerline.begin(), spec.centerline.end() - (spec.closed ? 1 : 0));
  const int n = static_cast<int>(k.size());
  auto knot = [&](int i) {
    if (spec.closed) return k[static_cast<std::size_t>(((i % n) + n) % n)];
    return k[static_cast<std::size_t>(std::clamp(i, 0, n - 1))];
  };
  const int n_segments = spec.closed ? n : n - 1;
  std::vector<BezierCurve> segments;
  segments.reserve(static_cast<std::size_t>(n_segments));
  for (int i = 0; i < n_segments; ++i) {
    const Point2 p0 = knot(i);
    const Point2 p1 = knot(i + 1);
    const Point2 c0 = p0 + (1.0 / 6.0) * (p1 - knot(i - 1));
    const Point2 c1 = p1 - (1.0 / 6.0) * (knot(i + 2) - p0);
    segments.emplace_back(std::vector<Point2>{p0, c0, c1, p1});
  }
  return segments;
}

Centerline::Centerline(const TrackSpec& spec, double max_spacing) : closed_(spec.closed) {
  if (!(max_spacing > 0.0)) throw DomainError("Centerline: spacing must be positive");
  points_ = sample_segments(centerline_segments(spec), max_spacing);
  arc_.resize(points_.size(), 0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) arc_[i] = arc_[i - 1] + distance(points_[i], points_[i - 1]);
}

std::size_t Centerline::index_at(double s) const {
  const double len = length();
  if (closed_) {
    s = std::fmod(s, len);
    if (s < 0.0) s += len;
  } else {
    s = std::clamp(s, 0.0, len);
  }
  auto it = std::upper_bound(arc_.begin(), arc_.end(), s);
  const auto idx = static_cast<std::size_t>(std::distance(arc_.begin(), it));
  return idx == 0 ? 0 : std::min(idx - 1, points_.size() - 2);
}

Point2 Centerline::point_at(double s) const {
  const double len = length();
  if (closed_) {
    s = std::fmod(s, len);
    if (s < 0.0) s += len;
  } else {
    s = std::clamp(s, 0.0, len);
  }
  const std::size_t i = index_at(s);
  const double seg = arc_[i + 1] - arc_[i];
  const double f = seg > 0.0 ? std::clamp((s - arc_[i]) / seg, 0.0, 1.0) : 0.0;
  return points_[i] + f * (points_[i + 1] - points_[i]);
}

double Centerline::heading_at(double s) const {
  const std::size_t i = index_at(s);
  const Point2 d = points_[i + 1] - points_[i];
  return std::atan2(d.y, d.x);
}

double Centerline::project(Point2 p) const {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Point2 d = points_[i] - p;
    const double d2 = dot(d, d);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return arc_[best];
}

double min_turning_radius(const TrackSpec& spec) {
  double min_r = std::numeric_limits<double>::infinity();
  for (const auto& seg : centerline_segments(spec)) {
    const BezierCurve d1 = bezier_derivative(seg);
    const BezierCurve d2 = bezier_derivative(d1);
    for (int i = 0; i <= kCurvatureSamplesPerSegment; ++i) {
      const double t = static_cast<double>(i) / kCurvatureSamplesPerSegment;
      const Point2 v = bezier_eval(d1, t);
      const Point2 a = bezier_eval(d2, t);
      const double speed = norm(v);
      const double k = std::abs(cross(v, a));
      if (k > 0.0) min_r = std::min(min_r, speed * speed * speed / k);
    }
  }
  return min_r;
}

double pinch_adjacency(double width) { return 0.5 * std::numbers::pi * width; }

double min_nonadjacent_clearance(const TrackSpec& spec, double adjacency) {
  const Centerline line(spec, kPinchSpacing);
  const auto& pts = line.points();
  const auto& arc = line.arc();
  const double len = line.length();
  const std::size_t n = pts.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j + 1 < n; ++j) {
      double along = std::abs(arc[i] - 0.5 * (arc[j] + arc[j + 1]));
      if (spec.closed) along = std::min(along, len - along);
      if (along - 0.5 * (arc[j + 1] - arc[j]) <= adjacency) continue;
      best = std::min(best, point_segment_distance(pts[i], pts[j], pts[j + 1]));
    }
  }
  return best;
}

namespace {

bool within_bounds(const TrackSpec& spec) {
  const double margin = 0.5 * spec.width + 1.0;
  const Centerline line(spec, kPinchSpacing);
  return std::all_of(line.points().begin(), line.points().end(), [&](Point2 p) {
    return p.x >= margin && p.y >= margin && p.x <= spec.cols - 1 - margin && p.y <= spec.rows - 1 - margin;
  });
}

}  // namespace

TrackSpec generate_track(std::uint64_t seed, const TrackParams& params) {
  if (params.n_knots < 4) throw DomainError("generate_track: n_knots must be >= 4");
  if (params.rows <= 0 || params.cols <= 0) throw DomainError("generate_track: grid size must be positive");
  if (!(params.width >= kMinTrackWidth)) throw DomainError("generate_track: width below minimum");
  if (!(params.jitter >= 0.0 && params.jitter < 1.0)) throw DomainError("generate_track: jitter must be in [0, 1)");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const double cx = 0.5 * (params.cols - 1);
  const double cy = 0.5 * (params.rows - 1);
  const double margin = 0.5 * params.width + 3.0;
  const double rx = (cx - margin) / (1.0 + params.jitter);
  const double ry = (cy - margin) / (1.0 + params.jitter);
  const double step = 2.0 * std::numbers::pi / params.n_knots;

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    TrackSpec spec;
    spec.width = params.width;
    spec.rows = params.rows;
    spec.cols = params.cols;
    spec.seed = seed;
    spec.px_per_meter = params.px_per_meter;
    // Radial offsets get one circular [1/4, 1/2, 1/4] pass; raw per-knot
    // noise at this spacing almost never meets the turning-radius bound.
    const auto n = static_cast<std::size_t>(params.n_knots);
    std::vector<double> raw(n);
    std::vector<double> shift(n);
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] = unit(rng);
      shift[i] = unit(rng);
    }
    spec.centerline.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double offset = 0.25 * raw[(i + n - 1) % n] + 0.5 * raw[i] + 0.25 * raw[(i + 1) % n];
      const double radial = 1.0 + params.jitter * offset;
      const double angle = step * (static_cast<double>(i) + 0.5 * params.jitter * shift[i]);
      spec.centerline.push_back({cx + rx * radial * std::cos(angle), cy + ry * radial * std::sin(angle)});
    }
    spec.centerline.push_back(spec.centerline.front());

    if (!(rx > 0.0 && ry > 0.0)) continue;
    if (!within_bounds(spec)) continue;
    if (min_turning_radius(spec) < spec.width) continue;
    if (min_nonadjacent_clearance(spec, pinch_adjacency(spec.width)) < spec.width) continue;
    return spec;
  }
  throw GenerationError("generate_track: no feasible track after 100 attempts");
}

OccupancyGrid rasterize(const TrackSpec& spec) {
  validate(spec);
  const auto pts = sample_segments(centerline_segments(spec), 1.0 / kRasterSamplesPerPx);
  const double half = 0.5 * spec.width;
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(spec.rows) * spec.cols, 0);

  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Point2 a = pts[i];
    const Point2 b = pts[i + 1];
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - half)));
    const int c1 = std::min(spec.cols - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + half)));
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - half)));
    const int r1 = std::min(spec.rows - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + half)));
    for (int r = r0; r <= r1; ++r) {
      std::uint8_t* row = cells.data() + static_cast<std::size_t>(r) * spec.cols;
      for (int c = c0; c <= c1; ++c) {
        if (row[c] != 0) continue;
        if (point_segment_distance({static_cast<double>(c), static_cast<double>(r)}, a, b) <= half) row[c] = 1;
      }
    }
  }
  return OccupancyGrid(spec.rows, spec.cols, std::move(cells), spec.px_per_meter);
}

bool is_on_track(const OccupancyGrid& grid, Point2 p) {
  const double cx = std::floor(p.x + 0.5);
  const double cy = std::floor(p.y + 0.5);
  if (!(cx >= 0.0 && cy >= 0.0 && cx < grid.cols() && cy < grid.rows())) return false;
  return grid.at(static_cast<int>(cy), static_cast<int>(cx));
}

}  // namespace raceline
