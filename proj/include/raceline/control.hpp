#pragma once

#include "raceline/trajectory.hpp"
#include "raceline/vehicle.hpp"

namespace raceline {

struct PidGains {
  double kp = 1.0;
  double ki = 0.0;
  double kd = 0.1;
  double dt = 0.05;
  double integral_cap = 10.0;
};

/// Discrete PID on e = y_des - y with a clamped integral and output.
class PidController {
 public:
  /// Throws DomainError for negative gains, dt <= 0 or a negative cap.
  explicit PidController(const PidGains& gains = {});

  /// Returns clamp(kp*e + ki*I + kd*(e - e_prev)/dt, -1, 1).
  double throttle(double y_des, double y);

  double integral_state() const { return integral_; }
  double prev_error() const { return prev_error_; }
  const PidGains& gains() const { return gains_; }

  /// Clears the integral and sets the derivative reference.
  void reset(double prev_error = 0.0);

 private:
  PidGains gains_;
  double integral_ = 0.0;
  double prev_error_ = 0.0;
};

struct StanleyParams {
  double gain = 2.5;
  double v_soft = 1.0;  // px/s added to the speed in the cross-track term
};

void validate(const StanleyParams& params);

/// Unclamped front-wheel angle in radians:
///   -heading_error + atan(gain * cross_track / (speed + v_soft))
/// With cross_track > 0 meaning the front axle is left of the path, positive
/// output steers right (toward BicycleState::lateral()).
double stanley_angle(double heading_error, double cross_track, double speed, const StanleyParams& params);

/// Stanley law normalized by steer_max and clamped to [-1, 1].
double stanley_steer(const BicycleState& state, double path_heading, double cross_track,
                     const StanleyParams& params, double steer_max);

struct TrackerConfig {
  int lookahead_idx = 2;
  double target_gap = 30.0;    // px between the car and the lookahead sample
  double max_staleness = 0.5;  // s since the embedding was planned
};

/// Errors measured on the latest call to TrajectoryTracker::track.
struct TrackingErrors {
  double cross_track = 0.0;
  double path_heading = 0.0;
  double heading_error = 0.0;
  double gap = 0.0;
};

/// Longitudinal PID plus lateral Stanley tracking of one embedding at a
/// time. Holds per-vehicle state; do not share between vehicles.
class TrajectoryTracker {
 public:
  TrajectoryTracker(const PidGains& pid, const StanleyParams& stanley, const TrackerConfig& cfg);

  /// Throws StalenessError when state.t - embedding.frame.t exceeds
  /// max_staleness, DomainError when the lookahead index is out of range.
  ControlCommand track(const BicycleState& state, const TrajectoryEmbedding& embedding, const VehicleParams& vehicle);

  const TrackingErrors& last_errors() const { return errors_; }
  PidController& pid() { return pid_; }

 private:
  PidController pid_;
  StanleyParams stanley_;
  TrackerConfig cfg_;
  TrackingErrors errors_;
};

}  // namespace raceline
