#include "raceline/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "raceline/errors.hpp"

namespace raceline {

PidController::PidController(const PidGains& gains) : gains_(gains) {
  if (!(gains.kp >= 0.0 && gains.ki >= 0.0 && gains.kd >= 0.0)) throw DomainError("PID gains must be >= 0");
  if (!(gains.dt > 0.0)) throw DomainError("PID dt must be > 0");
  if (!(gains.integral_cap >= 0.0)) throw DomainError("PID integral cap must be >= 0");
}

double PidController::throttle(double y_des, double y) {
  const double e = y_des - y;
  integral_ = std::clamp(integral_ + e * gains_.dt, -gains_.integral_cap, gains_.integral_cap);
  const double derivative = (e - prev_error_) / gains_.dt;
  prev_error_ = e;
  const double out = gains_.kp * e + gains_.ki * integral_ + gains_.kd * derivative;
  if (std::isnan(out)) return 0.0;
  return std::clamp(out, -1.0, 1.0);
}

void PidController::reset(double prev_error) {
  integral_ = 0.0;
  prev_error_ = prev_error;
}

void validate(const StanleyParams& params) {
  if (!(params.gain > 0.0) || !(params.v_soft > 0.0)) throw DomainError("Stanley gain and v_soft must be > 0");
}

double stanley_angle(double heading_error, double cross_track, double speed, const StanleyParams& params) {
  return -heading_error + std::atan(params.gain * cross_track / (speed + params.v_soft));
}

double stanley_steer(const BicycleState& state, double path_heading, double cross_track,
                     const StanleyParams& params, double steer_max) {
  const double heading_error = wrap_angle(state.yaw - path_heading);
  const double raw = stanley_angle(heading_error, cross_track, state.v, params);
  return std::clamp(raw / steer_max, -1.0, 1.0);
}

TrajectoryTracker::TrajectoryTracker(const PidGains& pid, const StanleyParams& stanley, const TrackerConfig& cfg)
    : pid_(pid), stanley_(stanley), cfg_(cfg) {
  validate(stanley_);
  if (cfg_.lookahead_idx < 0) throw DomainError("lookahead index must be >= 0");
  if (!(cfg_.max_staleness >= 0.0)) throw DomainError("max_staleness must be >= 0");
}

ControlCommand TrajectoryTracker::track(const BicycleState& state, const TrajectoryEmbedding& embedding,
                                        const VehicleParams& vehicle) {
  if (state.t - embedding.frame.t > cfg_.max_staleness + 1e-9) {
    throw StalenessError("embedding is stale; replan required");
  }
  if (cfg_.lookahead_idx >= embedding.k) throw DomainError("lookahead index beyond the embedding");

  // Polyline: planning pose, then every embedded sample.
  std::vector<Point2> poly;
  poly.reserve(static_cast<std::size_t>(embedding.k) + 1);
  poly.push_back(embedding.frame.position());
  for (int i = 0; i < embedding.k; ++i) poly.push_back(embedding_point(embedding, i));

  const Point2 front = state.position() + vehicle.l_f * state.heading();
  double best_d2 = std::numeric_limits<double>::infinity();
  Point2 foot;
  Point2 dir{1.0, 0.0};
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const Point2 ab = poly[i + 1] - poly[i];
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) continue;
    const double s = std::clamp(dot(front - poly[i], ab) / len2, 0.0, 1.0);
    const Point2 q = poly[i] + s * ab;
    const Point2 d = front - q;
    const double d2 = dot(d, d);
    if (d2 < best_d2) {
      best_d2 = d2;
      foot = q;
      dir = (1.0 / std::sqrt(len2)) * ab;
    }
  }
  const Point2 right{-dir.y, dir.x};
  errors_.cross_track = -dot(front - foot, right);
  errors_.path_heading = std::atan2(dir.y, dir.x);
  errors_.heading_error = wrap_angle(state.yaw - errors_.path_heading);

  const Point2 lookahead = poly[static_cast<std::size_t>(cfg_.lookahead_idx) + 1];
  errors_.gap = dot(lookahead - state.position(), state.heading());

  const double steer = stanley_steer(state, errors_.path_heading, errors_.cross_track, stanley_, vehicle.steer_max);
  // Desired forward position is target_gap short of the lookahead sample; the
  // car sits at 0 in its own frame.
  const double throttle = pid_.throttle(errors_.gap - cfg_.target_gap, 0.0);
  return ControlCommand(steer, throttle);
}

}  // namespace raceline
