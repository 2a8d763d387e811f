#include "raceline/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "raceline/errors.hpp"

namespace raceline {

void validate(const VehicleParams& p) {
  const bool ok = p.l_f > 0.0 && p.l_r > 0.0 && p.a_max > 0.0 && p.v_max > 0.0 && p.drag >= 0.0 &&
                  p.steer_max > 0.0 && p.steer_max <= std::numbers::pi / 3.0 + 1e-12 && std::isfinite(p.mass) &&
                  std::isfinite(p.drag) && std::isfinite(p.v_max) && std::isfinite(p.a_max);
  if (!ok) throw DomainError("invalid VehicleParams");
}

Point2 BicycleState::heading() const { return {std::cos(yaw), std::sin(yaw)}; }
Point2 BicycleState::lateral() const { return {-std::sin(yaw), std::cos(yaw)}; }

ControlCommand::ControlCommand(double steer, double throttle)
    : steer_(std::clamp(steer, -1.0, 1.0)), throttle_(std::clamp(throttle, -1.0, 1.0)) {
  if (!std::isfinite(steer) || !std::isfinite(throttle)) throw DomainError("ControlCommand must be finite");
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

double slip_angle(const VehicleParams& params, double delta) {
  return std::atan(params.l_r * std::tan(delta) / (params.l_f + params.l_r));
}

BicycleState step(const BicycleState& s, const VehicleParams& params, const ControlCommand& cmd, double dt) {
  if (!(dt > 0.0 && dt <= 0.1)) throw DomainError("step: dt must be in (0, 0.1]");
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.yaw) || !std::isfinite(s.v) ||
      !std::isfinite(s.t)) {
    throw DomainError("step: non-finite state");
  }
  const double delta = cmd.steer() * params.steer_max;
  const double accel = cmd.throttle() * params.a_max;
  const double beta = slip_angle(params, delta);

  BicycleState next;
  next.x = s.x + s.v * std::cos(s.yaw + beta) * dt;
  next.y = s.y + s.v * std::sin(s.yaw + beta) * dt;
  next.yaw = wrap_angle(s.yaw + s.v * std::sin(beta) / params.l_r * dt);
  next.v = std::clamp(s.v + (accel - params.drag * s.v) * dt, 0.0, params.v_max);
  next.t = s.t + dt;
  return next;
}

void validate(const SensorConfig& cfg) {
  if (cfg.n_v < 2 || cfg.n_v % 2 == 0) throw DomainError("SensorConfig: n_v must be odd and >= 3");
  if (!(cfg.beta_offset >= 0.0) || (cfg.n_v - 1) * cfg.beta_offset > std::numbers::pi + 1e-12) {
    throw DomainError("SensorConfig: fan wider than pi");
  }
  if (!(cfg.range_cap > 0.0) || !std::isfinite(cfg.range_cap)) throw DomainError("SensorConfig: L must be > 0");
  if (!(cfg.range_resolution >= 0.0) || !std::isfinite(cfg.range_resolution)) {
    throw DomainError("SensorConfig: range_resolution must be >= 0");
  }
}

double ray_angle(const BicycleState& state, const SensorConfig& cfg, int i) {
  return state.yaw + (i - 0.5 * (cfg.n_v - 1)) * cfg.beta_offset;
}

double cast_ray(const OccupancyGrid& grid, Point2 origin, double angle, double cap, double resolution) {
  if (!is_on_track(grid, origin)) return 0.0;

  // Cells span [c - 0.5, c + 0.5) x [r - 0.5, r + 0.5). Far from walls the
  // ray jumps ahead using the clearance field: from any point inside a cell
  // with clearance k, the next k - 1.5 px along any direction stay on-track.
  // Near walls it walks cell by cell (Amanatides-Woo).
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::uint16_t* clear = grid.clearance().data();
  const int rows = grid.rows();
  const int cols = grid.cols();
  const auto cell = [cols](int r, int c) { return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c); };
  const double dx = std::cos(angle);
  const double dy = std::sin(angle);
  const int step_c = dx > 0.0 ? 1 : -1;
  const int step_r = dy > 0.0 ? 1 : -1;
  const double t_delta_c = dx != 0.0 ? 1.0 / std::abs(dx) : inf;
  const double t_delta_r = dy != 0.0 ? 1.0 / std::abs(dy) : inf;

  double t = 0.0;
  while (true) {
    const double ox = origin.x + t * dx + 0.5;
    const double oy = origin.y + t * dy + 0.5;
    int col = static_cast<int>(std::floor(ox));
    int row = static_cast<int>(std::floor(oy));
    const int k = clear[cell(row, col)];
    if (k >= 3) {
      t += k - 1.5;
      if (t >= cap) return cap;
      continue;
    }

    double t_max_c = dx > 0.0 ? (col + 1 - ox) / dx : (dx < 0.0 ? (col - ox) / dx : inf);
    double t_max_r = dy > 0.0 ? (row + 1 - oy) / dy : (dy < 0.0 ? (row - oy) / dy : inf);
    while (true) {
      double t_enter;
      if (t_max_c < t_max_r) {
        t_enter = t + t_max_c;
        t_max_c += t_delta_c;
        col += step_c;
      } else {
        t_enter = t + t_max_r;
        t_max_r += t_delta_r;
        row += step_r;
      }
      if (t_enter >= cap) return cap;
      const bool inside = row >= 0 && col >= 0 && row < rows && col < cols;
      const int kc = inside ? clear[cell(row, col)] : 0;
      if (kc == 0) {
        if (resolution <= 0.0) return t_enter;
        // Register the cell only if a range sample lands in it.
        const double sample = std::ceil(t_enter / resolution) * resolution;
        if (sample < t + std::min(t_max_c, t_max_r)) return sample > cap ? cap : t_enter;
        continue;
      }
      if (kc >= 3) {
        t = t_enter + (kc - 1.5);
        break;
      }
    }
    if (t >= cap) return cap;
  }
}

void sense_into(const BicycleState& state, const OccupancyGrid& grid, const SensorConfig& cfg,
                std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(cfg.n_v)) throw DomainError("sense: output size mismatch");
  const Point2 origin = state.position();
  if (!is_on_track(grid, origin)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (int i = 0; i < cfg.n_v; ++i) {
    out[static_cast<std::size_t>(i)] = cast_ray(grid, origin, ray_angle(state, cfg, i), cfg.range_cap, cfg.range_resolution);
  }
}

std::vector<double> sense(const BicycleState& state, const OccupancyGrid& grid, const SensorConfig& cfg) {
  std::vector<double> out(static_cast<std::size_t>(cfg.n_v));
  sense_into(state, grid, cfg, out);
  return out;
}

}  // namespace raceline
