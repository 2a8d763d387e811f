// raceline: track generation, policy training, planning and benchmarking.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "raceline/config.hpp"
#include "raceline/errors.hpp"
#include "raceline/evolve.hpp"
#include "raceline/harness.hpp"
#include "raceline/pgm.hpp"
#include "raceline/policy.hpp"
#include "raceline/track.hpp"
#include "raceline/trajectory.hpp"

namespace fs = std::filesystem;
using namespace raceline;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRunFailure = 2;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;

  RunConfig load() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
    if (seed) cfg.evolution.master_seed = *seed;
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Run config file (key=value)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "Override the master seed");
}

void print_row(const std::string& label, const BenchmarkRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("-"); };
  std::printf("%-8s laps=%d t_lap_avg=%s t_first_failure=%s distance=%.1f\n", label.c_str(), r.successful_laps,
              opt(r.t_lap_avg).c_str(), opt(r.t_first_failure).c_str(), r.distance_covered);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Racing-line synthesis: evolve a driving policy, embed its paths, track them closed-loop"};
  app.require_subcommand(1);

  // generate-track
  auto* gen = app.add_subcommand("generate-track", "Generate a track and write it as PGM plus .meta sidecar");
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  TrackParams gen_params;
  std::optional<int> gen_size;
  gen->add_option("--seed", gen_seed, "Track seed")->required();
  gen->add_option("--out", gen_out, "Output PGM path")->required();
  gen->add_option("--width", gen_params.width, "Track width (px)");
  gen->add_option("--size", gen_size, "Grid side length (px)");
  gen->add_option("--knots", gen_params.n_knots, "Number of spline knots");
  gen->add_option("--jitter", gen_params.jitter, "Radial jitter as a fraction of the radius");

  // train
  auto* trn = app.add_subcommand("train", "Evolve a policy");
  CommonOptions trn_opts;
  std::string trn_out = "policy.bin";
  std::string trn_stats = "stats.csv";
  bool trn_quiet = false;
  add_common(trn, trn_opts);
  trn->add_option("--out", trn_out, "Policy output path");
  trn->add_option("--stats", trn_stats, "Per-generation stats CSV");
  trn->add_flag("--quiet", trn_quiet, "Do not print per-generation progress");

  // plan
  auto* pln = app.add_subcommand("plan", "Embed the oracle trajectory from one pose on a PGM grid");
  CommonOptions pln_opts;
  std::string pln_policy;
  std::string pln_grid;
  BicycleState pln_pose;
  add_common(pln, pln_opts);
  pln->add_option("--policy", pln_policy, "Policy file")->required()->check(CLI::ExistingFile);
  pln->add_option("--grid", pln_grid, "Grid PGM")->required()->check(CLI::ExistingFile);
  pln->add_option("--x", pln_pose.x, "Pose x (px)")->required();
  pln->add_option("--y", pln_pose.y, "Pose y (px)")->required();
  pln->add_option("--yaw", pln_pose.yaw, "Pose yaw (rad)")->required();
  pln->add_option("--v", pln_pose.v, "Initial speed (px/s)");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Closed-loop lap benchmark on generated tracks");
  CommonOptions bench_opts;
  std::string bench_policy;
  std::string bench_out = "report.csv";
  std::string bench_seeds;
  add_common(bench, bench_opts);
  bench->add_option("--policy", bench_policy, "Policy file")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", bench_out, "Report CSV");
  bench->add_option("--seeds", bench_seeds, "Comma-separated track seeds (default from config)");

  // export-dataset
  auto* exp = app.add_subcommand("export-dataset", "Export (OGM crop, trajectory embedding) pairs");
  CommonOptions exp_opts;
  std::string exp_policy;
  std::string exp_seeds = "1,2,3";
  int exp_per_track = 500;
  std::string exp_out = "data";
  add_common(exp, exp_opts);
  exp->add_option("--policy", exp_policy, "Policy file")->required()->check(CLI::ExistingFile);
  exp->add_option("--seeds", exp_seeds, "Comma-separated track seeds");
  exp->add_option("--per-track", exp_per_track, "Poses per track")->check(CLI::NonNegativeNumber);
  exp->add_option("--out", exp_out, "Output directory");

  // replay
  auto* rep = app.add_subcommand("replay", "Run one closed-loop episode and render it");
  CommonOptions rep_opts;
  std::string rep_policy;
  std::uint64_t rep_track = 101;
  std::string rep_out = "replay";
  add_common(rep, rep_opts);
  rep->add_option("--policy", rep_policy, "Policy file")->required()->check(CLI::ExistingFile);
  rep->add_option("--track-seed", rep_track, "Track seed (benchmark jitter)");
  rep->add_option("--out", rep_out, "Output prefix for .ppm and .csv");

  // rate
  auto* rate = app.add_subcommand("rate", "Measure the planning rate on one core");
  CommonOptions rate_opts;
  std::string rate_policy;
  int rate_reps = 1000;
  std::uint64_t rate_track = 101;
  add_common(rate, rate_opts);
  rate->add_option("--policy", rate_policy, "Policy file")->required()->check(CLI::ExistingFile);
  rate->add_option("--reps", rate_reps, "Timed repetitions")->check(CLI::Range(100, 100000000));
  rate->add_option("--track-seed", rate_track, "Track seed (benchmark jitter)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) {
      if (gen_size) gen_params.rows = gen_params.cols = *gen_size;
      const TrackSpec spec = generate_track(gen_seed, gen_params);
      save_grid(gen_out, rasterize(spec), {spec.seed, spec.width, spec.px_per_meter});
      const BicycleState start = spawn_pose(spec);
      std::printf("wrote %s (start x=%.3f y=%.3f yaw=%.6f)\n", gen_out.c_str(), start.x, start.y, start.yaw);
    } else if (*trn) {
      const RunConfig cfg = trn_opts.load();
      const TrainResult result = train(cfg.evolution, [&](const GenerationStats& s) {
        if (!trn_quiet) {
          std::printf("gen %4d best %.2f survivors %.2f population %.2f\n", s.generation, s.best_fitness,
                      s.mean_survivor_fitness, s.mean_population_fitness);
          std::fflush(stdout);
        }
      });
      save_policy(fs::path(trn_out), result.best);
      write_stats_csv(trn_stats, result.stats);
      std::printf("best fitness %.3f -> %s\n", result.best_fitness, trn_out.c_str());
    } else if (*pln) {
      const RunConfig cfg = pln_opts.load();
      const MlpPolicy policy = load_policy(fs::path(pln_policy));
      const LoadedGrid loaded = load_grid(pln_grid);
      pln_pose.yaw = wrap_angle(pln_pose.yaw);
      const TrajectoryEmbedding e = oracle_generate(policy, loaded.grid, pln_pose, cfg.oracle());
      for (std::size_t i = 0; i < e.xs.size(); ++i) std::printf("%s%s", i ? "," : "", format_double(e.xs[i]).c_str());
      std::printf("\n");
    } else if (*bench) {
      const RunConfig cfg = bench_opts.load();
      const MlpPolicy policy = load_policy(fs::path(bench_policy));
      const auto seeds = bench_seeds.empty() ? cfg.bench_seeds : parse_u64_list(bench_seeds);
      const BenchmarkReport report = run_benchmark(policy, seeds, cfg);
      write_report_csv(bench_out, report);
      for (const auto& r : report.rows) print_row(std::to_string(r.track_seed), r);
      print_row("all", report.aggregate);
      const bool any_ok = std::any_of(report.rows.begin(), report.rows.end(),
                                      [](const BenchmarkRow& r) { return r.successful_laps > 0; });
      if (!any_ok) {
        std::fprintf(stderr, "benchmark: every track failed\n");
        return kExitRunFailure;
      }
    } else if (*exp) {
      const RunConfig cfg = exp_opts.load();
      const MlpPolicy policy = load_policy(fs::path(exp_policy));
      const auto seeds = parse_u64_list(exp_seeds);
      const Manifest m = export_dataset(policy, seeds, exp_per_track, exp_out, cfg.export_config());
      std::printf("exported %zu of %d samples to %s (%d skipped)\n", m.rows.size(), m.attempted, exp_out.c_str(),
                  m.skipped);
    } else if (*rep) {
      const RunConfig cfg = rep_opts.load();
      const MlpPolicy policy = load_policy(fs::path(rep_policy));
      const TrackSpec spec = generate_track(rep_track, cfg.bench_track());
      const OccupancyGrid grid = rasterize(spec);
      const ClosedLoopResult result = run_closed_loop(policy, grid, spec, cfg);
      render_replay(result.log, grid, rep_out);
      print_row(std::to_string(rep_track), result.row);
    } else if (*rate) {
      const RunConfig cfg = rate_opts.load();
      const MlpPolicy policy = load_policy(fs::path(rate_policy));
      const TrackSpec spec = generate_track(rate_track, cfg.bench_track());
      const OccupancyGrid grid = rasterize(spec);
      const Centerline line(spec, 0.5);
      std::vector<BicycleState> poses;
      for (int i = 0; i < 64; ++i) {
        const double s = line.length() * i / 64.0;
        const Point2 p = line.point_at(s);
        poses.push_back({p.x, p.y, wrap_angle(line.heading_at(s)), 0.0, 0.0});
      }
      const double hz = measure_planner_rate(policy, grid, poses, rate_reps, cfg.oracle());
      std::printf("planner rate: %.1f cycles/s (median of %d)\n", hz, rate_reps);
    }
  } catch (const DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRunFailure;
  }
  return kExitOk;
}
