#include "raceline/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "raceline/errors.hpp"

namespace raceline {

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + s * ab);
}

BezierCurve::BezierCurve(std::vector<Point2> control_points)
    : control_points_(std::move(control_points)) {
  if (control_points_.size() < 2) {
    throw DomainError("BezierCurve needs at least 2 control points");
  }
  for (const auto& p : control_points_) {
    if (!p.finite()) throw DomainError("BezierCurve control points must be finite");
  }
}

namespace {

Point2 de_casteljau(std::vector<Point2> pts, double t) {
  for (std::size_t level = pts.size() - 1; level > 0; --level) {
    for (std::size_t i = 0; i < level; ++i) {
      pts[i] = (1.0 - t) * pts[i] + t * pts[i + 1];
    }
  }
  return pts.front();
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

Point2 bezier_eval(const BezierCurve& curve, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("bezier_eval: t outside [0, 1]");
  return de_casteljau(curve.control_points(), t);
}

std::pair<BezierCurve, BezierCurve> bezier_split(const BezierCurve& curve, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("bezier_split: t outside [0, 1]");
  std::vector<Point2> pts = curve.control_points();
  const std::size_t n = pts.size();
  std::vector<Point2> left(n);
  std::vector<Point2> right(n);
  left[0] = pts[0];
  right[n - 1] = pts[n - 1];
  for (std::size_t level = n - 1; level > 0; --level) {
    for (std::size_t i = 0; i < level; ++i) pts[i] = (1.0 - t) * pts[i] + t * pts[i + 1];
    left[n - level] = pts[0];
    right[level - 1] = pts[level - 1];
  }
  return {BezierCurve(std::move(left)), BezierCurve(std::move(right))};
}

BezierCurve bezier_derivative(const BezierCurve& curve) {
  const auto& cp = curve.control_points();
  const int d = curve.degree();
  std::vector<Point2> out;
  out.reserve(cp.size() - 1);
  for (int i = 0; i < d; ++i) out.push_back(static_cast<double>(d) * (cp[i + 1] - cp[i]));
  if (out.size() == 1) out.push_back(out.front());
  return BezierCurve(std::move(out));
}

std::vector<double> chord_length_parameters(std::span<const Point2> points) {
  std::vector<double> params(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i) {
    params[i] = params[i - 1] + distance(points[i], points[i - 1]);
  }
  const double total = params.empty() ? 0.0 : params.back();
  if (!(total > 0.0)) throw DomainError("chord-length parameterization of a zero-length path");
  for (auto& p : params) p /= total;
  params.back() = 1.0;
  return params;
}

BezierCurve bezier_fit(std::span<const Point2> points, int degree) {
  if (degree < 1) throw DomainError("bezier_fit: degree must be >= 1");
  const auto n_ctrl = static_cast<std::size_t>(degree) + 1;
  if (points.size() < n_ctrl) throw DomainError("bezier_fit: too few points for degree");

  std::vector<double> params;
  try {
    params = chord_length_parameters(points);
  } catch (const DomainError&) {
    throw FitError("bezier_fit: all points coincide");
  }

  const auto rows = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd basis(rows, degree + 1);
  Eigen::MatrixXd rhs(rows, 2);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double t = params[r];
    for (int i = 0; i <= degree; ++i) {
      basis(r, i) = binomial(degree, i) * std::pow(t, i) * std::pow(1.0 - t, degree - i);
    }
    rhs(r, 0) = points[r].x;
    rhs(r, 1) = points[r].y;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  qr.setThreshold(1e-12);
  if (qr.rank() < degree + 1) throw FitError("bezier_fit: rank-deficient basis matrix");
  const Eigen::MatrixXd solution = qr.solve(rhs);

  std::vector<Point2> ctrl(n_ctrl);
  for (std::size_t i = 0; i < n_ctrl; ++i) {
    ctrl[i] = {solution(static_cast<Eigen::Index>(i), 0), solution(static_cast<Eigen::Index>(i), 1)};
  }
  return BezierCurve(std::move(ctrl));
}

double fit_residual_rms(const BezierCurve& curve, std::span<const Point2> points,
                        std::span<const double> params) {
  if (points.size() != params.size() || points.empty()) {
    throw DomainError("fit_residual_rms: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point2 d = bezier_eval(curve, params[i]) - points[i];
    sum += dot(d, d);
  }
  return std::sqrt(sum / static_cast<double>(points.size()));
}

namespace {

constexpr int kMonotoneSamples = 256;
constexpr double kYTolerance = 1e-6;
constexpr double kRangeSlack = 1e-9;

}  // namespace

std::vector<double> solve_t_at_y(const BezierCurve& curve, std::span<const double> y_values) {
  const auto& cp = curve.control_points();
  double prev = cp.front().y;
  for (int i = 1; i <= kMonotoneSamples; ++i) {
    const double y = bezier_eval(curve, static_cast<double>(i) / kMonotoneSamples).y;
    if (y < prev) throw DomainError("resample_at_y: curve is not monotone in y");
    prev = y;
  }

  const double y0 = cp.front().y;
  const double y1 = cp.back().y;
  std::vector<double> ts;
  ts.reserve(y_values.size());
  for (const double target : y_values) {
    if (!(target >= y0 - kRangeSlack && target <= y1 + kRangeSlack)) {
      throw DomainError("resample_at_y: y outside the curve's range");
    }
    double lo = 0.0;
    double hi = 1.0;
    double t = 0.5;
    for (int iter = 0; iter < 200; ++iter) {
      t = 0.5 * (lo + hi);
      const double y = bezier_eval(curve, t).y;
      if (std::abs(y - target) <= kYTolerance) break;
      if (y < target) {
        lo = t;
      } else {
        hi = t;
      }
    }
    ts.push_back(t);
  }
  return ts;
}

std::vector<double> resample_at_y(const BezierCurve& curve, std::span<const double> y_values) {
  const auto ts = solve_t_at_y(curve, y_values);
  std::vector<double> xs;
  xs.reserve(ts.size());
  for (const double t : ts) xs.push_back(bezier_eval(curve, t).x);
  return xs;
}

}  // namespace raceline
