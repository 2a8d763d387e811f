#pragma once

#include <numbers>
#include <vector>

#include "raceline/geometry.hpp"
#include "raceline/track.hpp"

namespace raceline {

/// Kinematic bicycle parameters. Lengths in px, times in s. Defaults model a
/// 1/10-scale car at 10 px/m.
struct VehicleParams {
  double l_f = 1.3;
  double l_r = 1.3;
  double mass = 1.5;  // kg, metadata only
  double a_max = 40.0;
  double steer_max = 0.45;
  double drag = 0.3;
  double v_max = 80.0;
};

/// Throws DomainError unless l_f, l_r, a_max, v_max > 0, drag >= 0 and
/// 0 < steer_max <= pi/3.
void validate(const VehicleParams& params);

struct BicycleState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;  // wrapped to (-pi, pi]
  double v = 0.0;
  double t = 0.0;

  Point2 position() const { return {x, y}; }
  Point2 heading() const;
  /// Unit vector 90 degrees counter-clockwise (grid frame) from the heading.
  /// Positive steering turns toward it.
  Point2 lateral() const;

  friend bool operator==(const BicycleState&, const BicycleState&) = default;
};

/// Normalized actuation. Both components are clamped to [-1, 1].
class ControlCommand {
 public:
  ControlCommand() = default;
  ControlCommand(double steer, double throttle);

  double steer() const { return steer_; }
  double throttle() const { return throttle_; }

  friend bool operator==(const ControlCommand&, const ControlCommand&) = default;

 private:
  double steer_ = 0.0;
  double throttle_ = 0.0;
};

/// Angle wrapped into (-pi, pi].
double wrap_angle(double a);

/// Slip angle at the center of mass for front-wheel angle delta.
double slip_angle(const VehicleParams& params, double delta);

/// One explicit-Euler step of the kinematic bicycle model. Requires
/// 0 < dt <= 0.1 and finite inputs; throws DomainError otherwise.
BicycleState step(const BicycleState& state, const VehicleParams& params, const ControlCommand& cmd, double dt);

/// Ranging sensor layout: n_v rays fanned symmetrically about the heading.
struct SensorConfig {
  int n_v = 7;
  double beta_offset = std::numbers::pi / 6.0;
  double range_cap = 150.0;
  /// Spacing of range samples along a ray, px. An off-track cell stops the
  /// ray only when a sample falls inside it, so sub-sample corner clips at
  /// grazing incidence are passed over. 0 stops at every cell touched.
  double range_resolution = 0.05;
};

void validate(const SensorConfig& cfg);

/// World angle of ray i.
double ray_angle(const BicycleState& state, const SensorConfig& cfg, int i);

/// Distance along a ray to where it enters the first off-track cell, by grid
/// traversal (see SensorConfig::range_resolution for which cells count).
/// Returns `cap` when nothing is hit within it, 0 when the origin is off-track.
double cast_ray(const OccupancyGrid& grid, Point2 origin, double angle, double cap, double resolution = 0.0);

/// D_i = min(L, theta_i) for every ray; all zeros when the car is off-track.
std::vector<double> sense(const BicycleState& state, const OccupancyGrid& grid, const SensorConfig& cfg);

/// Allocation-free variant writing into `out` (size n_v).
void sense_into(const BicycleState& state, const OccupancyGrid& grid, const SensorConfig& cfg,
                std::span<double> out);

}  // namespace raceline
