#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "raceline/config.hpp"
#include "raceline/control.hpp"
#include "raceline/evolve.hpp"
#include "raceline/trajectory.hpp"

namespace raceline {

/// Every tunable of a run. Track, vehicle and sensor settings live inside
/// `evolution`; benchmark tracks reuse them with `bench_jitter`.
struct RunConfig {
  EvolutionConfig evolution;
  int k = 10;
  double y_step = 15.0;
  int horizon_steps = 200;
  PidGains pid;
  StanleyParams stanley;
  TrackerConfig tracker;
  int replan_interval = 10;
  int laps_target = 5;
  int step_cap = 60000;
  double lap_coverage = 0.8;
  std::vector<std::uint64_t> bench_seeds{101, 102, 103, 104, 105};
  double bench_jitter = 0.15;
  int crop_size = 128;

  OracleConfig oracle() const;
  ExportConfig export_config() const;
  TrackParams bench_track() const;
  /// PID gains with dt taken from the simulation step.
  PidGains pid_gains() const;
  TrackerConfig tracker_config() const;
};

void validate(const RunConfig& cfg);

/// Overlays recognised keys onto the defaults; unknown keys raise FormatError.
RunConfig parse_run_config(const KeyValues& kv);
RunConfig load_run_config(const std::filesystem::path& path);
KeyValues to_key_values(const RunConfig& cfg);

struct BenchmarkRow {
  std::uint64_t track_seed = 0;
  int successful_laps = 0;
  std::optional<double> t_lap_avg;
  std::optional<double> t_first_failure;
  double distance_covered = 0.0;

  friend bool operator==(const BenchmarkRow&, const BenchmarkRow&) = default;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  BenchmarkRow aggregate;  // laps and distance summed, lap time averaged, earliest failure

  friend bool operator==(const BenchmarkReport&, const BenchmarkReport&) = default;
};

struct ClosedLoopLog {
  std::vector<BicycleState> poses;
  std::vector<TrajectoryEmbedding> plans;
};

struct ClosedLoopResult {
  BenchmarkRow row;
  ClosedLoopLog log;
  std::vector<double> lap_times;
};

/// Counts forward crossings of the start line that follow at least
/// `coverage` of a lap of centerline progress.
class LapCounter {
 public:
  LapCounter(const TrackSpec& spec, double coverage);

  /// Feeds the next pose; returns true when it completes a lap.
  bool update(Point2 prev, Point2 next);

  int laps() const { return laps_; }
  double progress() const { return progress_; }
  double centerline_length() const { return line_.length(); }

 private:
  Centerline line_;
  Point2 origin_;
  Point2 tangent_;
  double half_width_;
  double coverage_;
  double last_s_;
  double progress_ = 0.0;
  int laps_ = 0;
};

/// Plan every replan_interval steps with the oracle, track with PID +
/// Stanley, step the car. Stops at laps_target laps, off-track, a failed
/// replan, or step_cap steps.
ClosedLoopResult run_closed_loop(const MlpPolicy& policy, const OccupancyGrid& grid, const TrackSpec& spec,
                                 const RunConfig& cfg);

/// Runs every seed (in parallel) and assembles rows in seed order.
BenchmarkReport run_benchmark(const MlpPolicy& policy, std::span<const std::uint64_t> track_seeds,
                              const RunConfig& cfg);

BenchmarkRow aggregate_rows(std::span<const BenchmarkRow> rows);

void write_report_csv(const std::filesystem::path& path, const BenchmarkReport& report);
BenchmarkReport read_report_csv(const std::filesystem::path& path);

/// Writes `<prefix>.ppm` (track white, off-track black, planned samples
/// green, driven poses red) and `<prefix>.csv` (t,x,y,yaw,v per pose).
void render_replay(const ClosedLoopLog& log, const OccupancyGrid& grid, const std::filesystem::path& prefix);

/// Median rate (planning cycles per second) of sense -> forward ->
/// oracle_generate over `reps` timed repetitions cycling through `poses`.
/// Failed plans still count as completed cycles.
double measure_planner_rate(const MlpPolicy& policy, const OccupancyGrid& grid, std::span<const BicycleState> poses,
                            int reps, const OracleConfig& oracle);

}  // namespace raceline
