#include "raceline/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <variant>

#include "raceline/errors.hpp"
#include "raceline/parallel.hpp"
#include "raceline/pgm.hpp"

namespace raceline {

OracleConfig RunConfig::oracle() const {
  return {k, y_step, horizon_steps, evolution.dt, evolution.vehicle, evolution.sensor};
}

ExportConfig RunConfig::export_config() const { return {oracle(), evolution.track, crop_size, evolution.threads}; }

TrackParams RunConfig::bench_track() const {
  TrackParams p = evolution.track;
  p.jitter = bench_jitter;
  return p;
}

PidGains RunConfig::pid_gains() const {
  PidGains g = pid;
  g.dt = evolution.dt;
  return g;
}

TrackerConfig RunConfig::tracker_config() const {
  TrackerConfig t = tracker;
  t.max_staleness = replan_interval * evolution.dt;
  return t;
}

void validate(const RunConfig& cfg) {
  validate(cfg.evolution);
  validate(cfg.stanley);
  if (cfg.k < 1 || !(cfg.y_step > 0.0)) throw DomainError("embedding needs k >= 1 and y_step > 0");
  if (cfg.horizon_steps < 1) throw DomainError("horizon_steps must be >= 1");
  if (cfg.replan_interval < 1) throw DomainError("replan_interval must be >= 1");
  if (cfg.laps_target < 1) throw DomainError("laps_target must be >= 1");
  if (cfg.step_cap < 1) throw DomainError("step_cap must be >= 1");
  if (!(cfg.lap_coverage > 0.0 && cfg.lap_coverage <= 1.0)) throw DomainError("lap_coverage must be in (0, 1]");
  if (cfg.tracker.lookahead_idx < 0 || cfg.tracker.lookahead_idx >= cfg.k) {
    throw DomainError("lookahead index must address an embedding sample");
  }
  if (cfg.crop_size < 1) throw DomainError("crop_size must be >= 1");
}

namespace {

using Slot = std::variant<double*, int*, unsigned*, std::uint64_t*, std::vector<std::uint64_t>*>;

std::vector<std::pair<std::string, Slot>> bind(RunConfig& c) {
  auto& e = c.evolution;
  return {
      {"seed", &e.master_seed},
      {"threads", &e.threads},
      {"track.rows", &e.track.rows},
      {"track.cols", &e.track.cols},
      {"track.width", &e.track.width},
      {"track.knots", &e.track.n_knots},
      {"track.jitter", &e.track.jitter},
      {"track.px_per_meter", &e.track.px_per_meter},
      {"vehicle.l_f", &e.vehicle.l_f},
      {"vehicle.l_r", &e.vehicle.l_r},
      {"vehicle.mass", &e.vehicle.mass},
      {"vehicle.a_max", &e.vehicle.a_max},
      {"vehicle.steer_max", &e.vehicle.steer_max},
      {"vehicle.drag", &e.vehicle.drag},
      {"vehicle.v_max", &e.vehicle.v_max},
      {"sensor.n_v", &e.sensor.n_v},
      {"sensor.beta_offset", &e.sensor.beta_offset},
      {"sensor.range_cap", &e.sensor.range_cap},
      {"sensor.range_resolution", &e.sensor.range_resolution},
      {"evolve.n_spawns", &e.n_spawns},
      {"evolve.m_survivors", &e.m_survivors},
      {"evolve.sigma", &e.sigma},
      {"evolve.generations", &e.generations},
      {"evolve.max_steps", &e.max_steps},
      {"evolve.dt", &e.dt},
      {"evolve.alpha", &e.reward_alpha},
      {"evolve.beta", &e.reward_beta},
      {"evolve.track_seeds", &e.track_seeds},
      {"evolve.hidden1", &e.hidden1},
      {"evolve.hidden2", &e.hidden2},
      {"embed.k", &c.k},
      {"embed.y_step", &c.y_step},
      {"embed.horizon_steps", &c.horizon_steps},
      {"control.kp", &c.pid.kp},
      {"control.ki", &c.pid.ki},
      {"control.kd", &c.pid.kd},
      {"control.integral_cap", &c.pid.integral_cap},
      {"control.stanley_gain", &c.stanley.gain},
      {"control.v_soft", &c.stanley.v_soft},
      {"control.lookahead_idx", &c.tracker.lookahead_idx},
      {"control.target_gap", &c.tracker.target_gap},
      {"bench.replan_interval", &c.replan_interval},
      {"bench.laps_target", &c.laps_target},
      {"bench.step_cap", &c.step_cap},
      {"bench.lap_coverage", &c.lap_coverage},
      {"bench.track_seeds", &c.bench_seeds},
      {"bench.jitter", &c.bench_jitter},
      {"export.crop_size", &c.crop_size},
  };
}

}  // namespace

RunConfig parse_run_config(const KeyValues& kv) {
  RunConfig cfg;
  auto slots = bind(cfg);
  for (const auto& [key, value] : kv.entries()) {
    const auto it = std::find_if(slots.begin(), slots.end(), [&](const auto& s) { return s.first == key; });
    if (it == slots.end()) throw FormatError("unknown config key '" + key + "'");
    std::visit(
        [&](auto* target) {
          using T = std::remove_pointer_t<decltype(target)>;
          if constexpr (std::is_same_v<T, double>) {
            *target = parse_double(value, key);
          } else if constexpr (std::is_same_v<T, int>) {
            *target = parse_int(value, key);
          } else if constexpr (std::is_same_v<T, unsigned>) {
            *target = static_cast<unsigned>(parse_u64(value, key));
          } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            *target = parse_u64(value, key);
          } else {
            *target = parse_u64_list(value);
          }
        },
        it->second);
  }
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(KeyValues::load(path)); }

KeyValues to_key_values(const RunConfig& cfg) {
  RunConfig copy = cfg;
  KeyValues kv;
  for (const auto& [key, slot] : bind(copy)) {
    std::visit(
        [&](auto* target) {
          using T = std::remove_pointer_t<decltype(target)>;
          if constexpr (std::is_same_v<T, double>) {
            kv.set(key, format_double(*target));
          } else if constexpr (std::is_same_v<T, std::vector<std::uint64_t>>) {
            kv.set(key, format_u64_list(*target));
          } else {
            kv.set(key, std::to_string(*target));
          }
        },
        slot);
  }
  return kv;
}

LapCounter::LapCounter(const TrackSpec& spec, double coverage)
    : line_(spec, 1.0),
      origin_(line_.point_at(0.0)),
      tangent_{std::cos(line_.heading_at(0.0)), std::sin(line_.heading_at(0.0))},
      half_width_(0.5 * spec.width),
      coverage_(coverage),
      last_s_(0.0) {
  if (!spec.closed) throw DomainError("LapCounter needs a closed track");
}

bool LapCounter::update(Point2 prev, Point2 next) {
  const double len = line_.length();
  const double s = line_.project(next);
  double delta = s - last_s_;
  if (delta > 0.5 * len) delta -= len;
  if (delta < -0.5 * len) delta += len;
  progress_ += delta;
  last_s_ = s;

  const double before = dot(prev - origin_, tangent_);
  const double after = dot(next - origin_, tangent_);
  if (!(before < 0.0 && after >= 0.0)) return false;
  const double f = before / (before - after);
  const Point2 hit = prev + f * (next - prev);
  if (distance(hit, origin_) > half_width_) return false;
  if (progress_ < coverage_ * len) return false;
  ++laps_;
  progress_ = 0.0;
  return true;
}

namespace {

// Near tight corners the driven path can turn away before covering the full
// horizon; fall back to shorter embeddings while the lookahead sample fits.
std::optional<TrajectoryEmbedding> replan(const MlpPolicy& policy, const OccupancyGrid& grid,
                                          const BicycleState& state, OracleConfig oracle, int min_k) {
  for (; oracle.k >= min_k; --oracle.k) {
    try {
      return oracle_generate(policy, grid, state, oracle);
    } catch (const HorizonError&) {
    }
  }
  return std::nullopt;
}

}  // namespace

ClosedLoopResult run_closed_loop(const MlpPolicy& policy, const OccupancyGrid& grid, const TrackSpec& spec,
                                 const RunConfig& cfg) {
  validate(cfg);
  const OracleConfig oracle = cfg.oracle();
  const VehicleParams& vehicle = cfg.evolution.vehicle;
  const double dt = cfg.evolution.dt;

  ClosedLoopResult out;
  out.row.track_seed = spec.seed;
  BicycleState state = spawn_pose(spec);
  out.log.poses.push_back(state);
  if (!is_on_track(grid, state.position())) {
    out.row.t_first_failure = state.t;
    return out;
  }

  LapCounter laps(spec, cfg.lap_coverage);
  TrajectoryTracker tracker(cfg.pid_gains(), cfg.stanley, cfg.tracker_config());
  std::optional<TrajectoryEmbedding> plan;
  double last_lap_t = 0.0;

  for (int i = 0; i < cfg.step_cap; ++i) {
    if (i % cfg.replan_interval == 0) {
      plan = replan(policy, grid, state, oracle, cfg.tracker.lookahead_idx + 1);
      if (!plan) {
        out.row.t_first_failure = state.t;
        break;
      }
      out.log.plans.push_back(*plan);
    }
    const BicycleState next = step(state, vehicle, tracker.track(state, *plan, vehicle), dt);
    out.row.distance_covered += distance(state.position(), next.position());
    out.log.poses.push_back(next);
    if (!is_on_track(grid, next.position())) {
      out.row.t_first_failure = next.t;
      break;
    }
    if (laps.update(state.position(), next.position())) {
      out.lap_times.push_back(next.t - last_lap_t);
      last_lap_t = next.t;
    }
    state = next;
    if (laps.laps() >= cfg.laps_target) break;
  }

  out.row.successful_laps = laps.laps();
  if (!out.lap_times.empty()) {
    out.row.t_lap_avg =
        std::accumulate(out.lap_times.begin(), out.lap_times.end(), 0.0) / static_cast<double>(out.lap_times.size());
  }
  return out;
}

BenchmarkRow aggregate_rows(std::span<const BenchmarkRow> rows) {
  BenchmarkRow agg;
  double lap_sum = 0.0;
  int lap_tracks = 0;
  for (const auto& r : rows) {
    agg.successful_laps += r.successful_laps;
    agg.distance_covered += r.distance_covered;
    if (r.t_lap_avg) {
      lap_sum += *r.t_lap_avg;
      ++lap_tracks;
    }
    if (r.t_first_failure && (!agg.t_first_failure || *r.t_first_failure < *agg.t_first_failure)) {
      agg.t_first_failure = r.t_first_failure;
    }
  }
  if (lap_tracks > 0) agg.t_lap_avg = lap_sum / lap_tracks;
  return agg;
}

BenchmarkReport run_benchmark(const MlpPolicy& policy, std::span<const std::uint64_t> track_seeds,
                              const RunConfig& cfg) {
  if (track_seeds.empty()) throw DomainError("run_benchmark: at least one track seed is required");
  validate(cfg);
  BenchmarkReport report;
  report.rows.resize(track_seeds.size());
  const TrackParams params = cfg.bench_track();
  parallel_for(track_seeds.size(), cfg.evolution.threads, [&](std::size_t i) {
    const TrackSpec spec = generate_track(track_seeds[i], params);
    const OccupancyGrid grid = rasterize(spec);
    report.rows[i] = run_closed_loop(policy, grid, spec, cfg).row;
  });
  report.aggregate = aggregate_rows(report.rows);
  return report;
}

namespace {

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

std::optional<double> parse_optional(const std::string& s, const std::string& what) {
  if (s == "none") return std::nullopt;
  return parse_double(s, what);
}

void write_row(std::ostream& out, const std::string& label, const BenchmarkRow& r) {
  out << label << ',' << r.successful_laps << ',' << optional_cell(r.t_lap_avg) << ','
      << optional_cell(r.t_first_failure) << ',' << format_double(r.distance_covered) << '\n';
}

}  // namespace

void write_report_csv(const std::filesystem::path& path, const BenchmarkReport& report) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "track_seed,successful_laps,t_lap_avg,t_first_failure,distance_covered\n";
  for (const auto& r : report.rows) write_row(out, std::to_string(r.track_seed), r);
  write_row(out, "all", report.aggregate);
  if (!out) throw FormatError("write failed for " + path.string());
}

BenchmarkReport read_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  BenchmarkReport report;
  bool saw_aggregate = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) throw FormatError("report csv: expected 5 columns");
    BenchmarkRow r;
    r.successful_laps = parse_int(cells[1], "successful_laps");
    r.t_lap_avg = parse_optional(cells[2], "t_lap_avg");
    r.t_first_failure = parse_optional(cells[3], "t_first_failure");
    r.distance_covered = parse_double(cells[4], "distance_covered");
    if (cells[0] == "all") {
      report.aggregate = r;
      saw_aggregate = true;
    } else {
      r.track_seed = parse_u64(cells[0], "track_seed");
      report.rows.push_back(r);
    }
  }
  if (!saw_aggregate) throw FormatError("report csv: missing aggregate row");
  return report;
}

void render_replay(const ClosedLoopLog& log, const OccupancyGrid& grid, const std::filesystem::path& prefix) {
  if (log.poses.empty()) throw DomainError("render_replay: empty pose log");
  RgbImage img{grid.rows(), grid.cols(), {}};
  img.pixels.reserve(grid.cells().size() * 3);
  for (const auto c : grid.cells()) {
    const std::uint8_t v = c != 0 ? 255 : 0;
    img.pixels.insert(img.pixels.end(), {v, v, v});
  }
  auto paint = [&](Point2 p, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const double col = std::floor(p.x + 0.5);
    const double row = std::floor(p.y + 0.5);
    if (!(col >= 0 && row >= 0 && col < grid.cols() && row < grid.rows())) return;
    const auto idx = (static_cast<std::size_t>(row) * grid.cols() + static_cast<std::size_t>(col)) * 3;
    img.pixels[idx] = r;
    img.pixels[idx + 1] = g;
    img.pixels[idx + 2] = b;
  };
  for (const auto& plan : log.plans) {
    for (int i = 0; i < plan.k; ++i) paint(embedding_point(plan, i), 0, 170, 0);
  }
  for (const auto& s : log.poses) paint(s.position(), 255, 0, 0);

  auto ppm = prefix;
  ppm += ".ppm";
  write_ppm(ppm, img);

  auto csv = prefix;
  csv += ".csv";
  std::ofstream out(csv);
  if (!out) throw FormatError("cannot open " + csv.string() + " for writing");
  out << "t,x,y,yaw,v\n";
  for (const auto& s : log.poses) {
    out << format_double(s.t) << ',' << format_double(s.x) << ',' << format_double(s.y) << ','
        << format_double(s.yaw) << ',' << format_double(s.v) << '\n';
  }
  if (!out) throw FormatError("write failed for " + csv.string());
}

double measure_planner_rate(const MlpPolicy& policy, const OccupancyGrid& grid, std::span<const BicycleState> poses,
                            int reps, const OracleConfig& oracle) {
  if (reps < 1 || poses.empty()) throw DomainError("measure_planner_rate: need reps >= 1 and at least one pose");
  std::vector<double> inputs(static_cast<std::size_t>(oracle.sensor.n_v));
  std::vector<double> seconds;
  seconds.reserve(static_cast<std::size_t>(reps));
  double sink = 0.0;
  for (int r = 0; r < reps; ++r) {
    const BicycleState& pose = poses[static_cast<std::size_t>(r) % poses.size()];
    const auto t0 = std::chrono::steady_clock::now();
    sense_into(pose, grid, oracle.sensor, inputs);
    for (auto& d : inputs) d /= oracle.sensor.range_cap;
    sink += forward(policy, inputs).steer();
    try {
      sink += oracle_generate(policy, grid, pose, oracle).xs.front();
    } catch (const HorizonError&) {
    } catch (const DomainError&) {
    }
    const auto t1 = std::chrono::steady_clock::now();
    seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  static_cast<void>(sink);
  std::sort(seconds.begin(), seconds.end());
  const std::size_t n = seconds.size();
  const double median = n % 2 == 1 ? seconds[n / 2] : 0.5 * (seconds[n / 2 - 1] + seconds[n / 2]);
  return median > 0.0 ? 1.0 / median : std::numeric_limits<double>::infinity();
}

}  // namespace raceline
