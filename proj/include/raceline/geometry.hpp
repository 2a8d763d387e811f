#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace raceline {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend Point2 operator*(Point2 p, double s) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;

  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

/// Distance from p to the closed segment [a, b].
double point_segment_distance(Point2 p, Point2 a, Point2 b);

/// Single polynomial Bezier curve. Holds at least two finite control points.
class BezierCurve {
 public:
  explicit BezierCurve(std::vector<Point2> control_points);

  const std::vector<Point2>& control_points() const { return control_points_; }
  int degree() const { return static_cast<int>(control_points_.size()) - 1; }

 private:
  std::vector<Point2> control_points_;
};

/// De Casteljau evaluation. Throws DomainError unless 0 <= t <= 1.
Point2 bezier_eval(const BezierCurve& curve, double t);

/// First-derivative curve (hodograph), one degree lower. A degree-1 input
/// yields a constant curve with two equal control points.
BezierCurve bezier_derivative(const BezierCurve& curve);

/// Splits the curve at t into the pieces over [0, t] and [t, 1], each
/// reparameterized to [0, 1]. Throws DomainError unless 0 <= t <= 1.
std::pair<BezierCurve, BezierCurve> bezier_split(const BezierCurve& curve, double t);

/// Chord-length parameters in [0, 1] for a polyline, first 0 and last 1.
/// Throws DomainError on a zero total length.
std::vector<double> chord_length_parameters(std::span<const Point2> points);

/// Least-squares fit of a degree-`degree` curve to `points` at their
/// chord-length parameters.
///
/// Throws DomainError for fewer than degree + 1 points and FitError when the
/// Bernstein design matrix is rank deficient.
BezierCurve bezier_fit(std::span<const Point2> points, int degree = 3);

/// Root-mean-square distance between points and the curve at the given
/// parameters.
double fit_residual_rms(const BezierCurve& curve, std::span<const Point2> points,
                        std::span<const double> params);

/// x-coordinates of the curve at each requested y.
///
/// The curve must be non-decreasing in y along t (checked at 256 samples) and
/// every y must lie in [y(0), y(1)]; otherwise DomainError. Each x is found by
/// bisection on t until |y(t) - y| <= 1e-6.
std::vector<double> resample_at_y(const BezierCurve& curve, std::span<const double> y_values);

/// Same as resample_at_y but returns the solved curve parameters.
std::vector<double> solve_t_at_y(const BezierCurve& curve, std::span<const double> y_values);

}  // namespace raceline
