#include "raceline/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "raceline/config.hpp"
#include "raceline/errors.hpp"
#include "raceline/parallel.hpp"
#include "raceline/seeding.hpp"

namespace raceline {

void validate(const EvolutionConfig& cfg) {
  if (!(cfg.m_survivors > 0 && cfg.m_survivors < cfg.n_spawns)) {
    throw DomainError("evolution: need 0 < m_survivors < n_spawns");
  }
  if (!(cfg.sigma >= 0.0) || !std::isfinite(cfg.sigma)) throw DomainError("evolution: sigma must be >= 0");
  if (cfg.generations < 1) throw DomainError("evolution: generations must be >= 1");
  if (cfg.max_steps < 1) throw DomainError("evolution: max_steps must be >= 1");
  if (!(cfg.dt > 0.0 && cfg.dt <= 0.1)) throw DomainError("evolution: dt must be in (0, 0.1]");
  if (!std::isfinite(cfg.reward_alpha) || !std::isfinite(cfg.reward_beta)) {
    throw DomainError("evolution: reward coefficients must be finite");
  }
  if (cfg.hidden1 < 1 || cfg.hidden2 < 1) throw DomainError("evolution: hidden widths must be >= 1");
  validate(cfg.vehicle);
  validate(cfg.sensor);
}

BicycleState spawn_pose(const TrackSpec& spec) {
  const Centerline line(spec, 0.5);
  const Point2 p = line.point_at(0.0);
  return {p.x, p.y, wrap_angle(line.heading_at(0.0)), 0.0, 0.0};
}

TrackEnv make_track_env(std::uint64_t seed, const TrackParams& params) {
  TrackSpec spec = generate_track(seed, params);
  OccupancyGrid grid = rasterize(spec);
  const BicycleState start = spawn_pose(spec);
  return {std::move(spec), std::move(grid), start};
}

Drive drive_policy(const MlpPolicy& policy, const OccupancyGrid& grid, const BicycleState& start,
                   const VehicleParams& vehicle, const SensorConfig& sensor, double dt, int max_steps,
                   const std::function<bool(const BicycleState&)>& stop) {
  if (!is_on_track(grid, start.position())) throw DomainError("drive: start pose is off-track");
  Drive out;
  out.states.reserve(static_cast<std::size_t>(std::min(max_steps, 4096)) + 1);
  out.states.push_back(start);
  std::vector<double> inputs(static_cast<std::size_t>(sensor.n_v));
  BicycleState state = start;
  for (int i = 0; i < max_steps; ++i) {
    sense_into(state, grid, sensor, inputs);
    for (auto& d : inputs) d /= sensor.range_cap;
    state = step(state, vehicle, forward(policy, inputs), dt);
    if (!is_on_track(grid, state.position())) {
      out.off_track = true;
      break;
    }
    out.states.push_back(state);
    if (stop && stop(state)) break;
  }
  return out;
}

RolloutResult rollout(const MlpPolicy& policy, const OccupancyGrid& grid, const BicycleState& start,
                      const EvolutionConfig& cfg) {
  const Drive drive = drive_policy(policy, grid, start, cfg.vehicle, cfg.sensor, cfg.dt, cfg.max_steps);
  RolloutResult r;
  r.terminated_off_track = drive.off_track;
  r.steps_survived = static_cast<int>(drive.states.size()) - 1;
  r.path.reserve(drive.states.size());
  for (const auto& s : drive.states) r.path.push_back(s.position());
  for (std::size_t i = 1; i < r.path.size(); ++i) r.total_distance += distance(r.path[i], r.path[i - 1]);
  r.mean_speed = r.steps_survived > 0 ? r.total_distance / (r.steps_survived * cfg.dt) : 0.0;
  r.fitness = cfg.reward_alpha * r.mean_speed + cfg.reward_beta * r.total_distance;
  return r;
}

std::vector<std::size_t> rank_by_fitness(std::span<const double> fitness) {
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
  return order;
}

std::vector<MlpPolicy> evolve_generation(std::span<const ScoredPolicy> population, const EvolutionConfig& cfg,
                                         std::uint64_t gen_seed) {
  if (population.size() != static_cast<std::size_t>(cfg.n_spawns)) {
    throw DomainError("evolve_generation: population size differs from n_spawns");
  }
  std::vector<double> fitness;
  fitness.reserve(population.size());
  for (const auto& p : population) fitness.push_back(p.fitness);
  const auto order = rank_by_fitness(fitness);

  const auto m = static_cast<std::size_t>(cfg.m_survivors);
  std::vector<MlpPolicy> next;
  next.reserve(population.size());
  for (std::size_t i = 0; i < m; ++i) next.push_back(population[order[i]].policy);
  for (std::size_t j = m; j < population.size(); ++j) {
    const MlpPolicy& parent = population[order[(j - m) % m]].policy;
    next.push_back(mutate(parent, cfg.sigma, derive_seed(gen_seed, j)));
  }
  return next;
}

double evaluate(const MlpPolicy& policy, std::span<const TrackEnv> envs, const EvolutionConfig& cfg) {
  if (envs.empty()) throw DomainError("evaluate: no tracks");
  double sum = 0.0;
  for (const auto& env : envs) sum += rollout(policy, env.grid, env.start, cfg).fitness;
  return sum / static_cast<double>(envs.size());
}

TrainResult train(const EvolutionConfig& cfg, const GenerationCallback& on_generation) {
  validate(cfg);
  if (cfg.track_seeds.empty()) throw DomainError("train: at least one track seed is required");

  std::vector<TrackEnv> envs;
  envs.reserve(cfg.track_seeds.size());
  for (const auto seed : cfg.track_seeds) envs.push_back(make_track_env(seed, cfg.track));

  const auto n = static_cast<std::size_t>(cfg.n_spawns);
  const auto m = static_cast<std::size_t>(cfg.m_survivors);
  const LayerSizes sizes = cfg.layer_sizes();
  const std::uint64_t init_seed = derive_seed(cfg.master_seed, 0);
  const std::uint64_t evolve_seed = derive_seed(cfg.master_seed, 1);

  std::vector<MlpPolicy> population;
  population.reserve(n);
  for (std::size_t i = 0; i < n; ++i) population.push_back(random_init(derive_seed(init_seed, i), sizes));

  TrainResult result{population.front(), -std::numeric_limits<double>::infinity(), {}};
  result.stats.reserve(static_cast<std::size_t>(cfg.generations));

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    std::vector<double> fitness(n, 0.0);
    parallel_for(n, cfg.threads, [&](std::size_t i) { fitness[i] = evaluate(population[i], envs, cfg); });

    const auto order = rank_by_fitness(fitness);
    GenerationStats stats;
    stats.generation = gen;
    stats.best_fitness = fitness[order.front()];
    double survivors = 0.0;
    for (std::size_t i = 0; i < m; ++i) survivors += fitness[order[i]];
    stats.mean_survivor_fitness = survivors / static_cast<double>(m);
    stats.mean_population_fitness = std::accumulate(fitness.begin(), fitness.end(), 0.0) / static_cast<double>(n);
    result.stats.push_back(stats);
    if (on_generation) on_generation(stats);

    if (stats.best_fitness > result.best_fitness) {
      result.best_fitness = stats.best_fitness;
      result.best = population[order.front()];
    }
    if (gen == cfg.generations) break;

    std::vector<ScoredPolicy> scored;
    scored.reserve(n);
    for (std::size_t i = 0; i < n; ++i) scored.push_back({std::move(population[i]), fitness[i]});
    population = evolve_generation(scored, cfg, derive_seed(evolve_seed, static_cast<std::uint64_t>(gen)));
  }
  return result;
}

void write_stats_csv(const std::filesystem::path& path, std::span<const GenerationStats> stats) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "generation,best_fitness,mean_survivor_fitness,mean_population_fitness\n";
  for (const auto& s : stats) {
    out << s.generation << ',' << format_double(s.best_fitness) << ',' << format_double(s.mean_survivor_fitness)
        << ',' << format_double(s.mean_population_fitness) << '\n';
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

std::vector<GenerationStats> read_stats_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<GenerationStats> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 4) throw FormatError("stats.csv: expected 4 columns");
    out.push_back({parse_int(cells[0], "generation"), parse_double(cells[1], "best_fitness"),
                   parse_double(cells[2], "mean_survivor_fitness"), parse_double(cells[3], "mean_population_fitness")});
  }
  return out;
}

}  // namespace raceline
