#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "raceline/policy.hpp"
#include "raceline/track.hpp"
#include "raceline/vehicle.hpp"

namespace raceline {

struct EvolutionConfig {
  int n_spawns = 100;
  int m_survivors = 20;
  double sigma = 0.1;
  int generations = 200;
  int max_steps = 2000;
  double dt = 0.05;
  double reward_alpha = 1.0;
  double reward_beta = 1.0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> track_seeds{1, 2, 3};
  int hidden1 = 16;
  int hidden2 = 16;
  unsigned threads = 0;  // 0: all hardware threads

  TrackParams track;
  VehicleParams vehicle;
  SensorConfig sensor;

  LayerSizes layer_sizes() const { return {sensor.n_v, hidden1, hidden2, 2}; }
};

void validate(const EvolutionConfig& cfg);

struct RolloutResult {
  double fitness = 0.0;
  std::vector<Point2> path;  // start pose plus one entry per surviving step
  int steps_survived = 0;
  double total_distance = 0.0;
  double mean_speed = 0.0;
  bool terminated_off_track = false;
};

struct GenerationStats {
  int generation = 0;  // 1-based
  double best_fitness = 0.0;
  double mean_survivor_fitness = 0.0;
  double mean_population_fitness = 0.0;

  friend bool operator==(const GenerationStats&, const GenerationStats&) = default;
};

/// Spawn pose: centerline start, heading along the tangent, at rest.
BicycleState spawn_pose(const TrackSpec& spec);

/// A generated track ready for driving.
struct TrackEnv {
  TrackSpec spec;
  OccupancyGrid grid;
  BicycleState start;
};

TrackEnv make_track_env(std::uint64_t seed, const TrackParams& params);

/// Output of the shared sense -> forward -> step loop.
struct Drive {
  std::vector<BicycleState> states;  // start plus every on-track state
  bool off_track = false;
};

/// Drives `policy` from `start` for up to `max_steps` steps, stopping at the
/// first off-track state (not recorded) or when `stop` returns true for the
/// latest state.
Drive drive_policy(const MlpPolicy& policy, const OccupancyGrid& grid, const BicycleState& start,
                   const VehicleParams& vehicle, const SensorConfig& sensor, double dt, int max_steps,
                   const std::function<bool(const BicycleState&)>& stop = {});

/// Runs one episode and scores it with R = alpha * v_mean + beta * d.
/// Throws DomainError when the start pose is off-track.
RolloutResult rollout(const MlpPolicy& policy, const OccupancyGrid& grid, const BicycleState& start,
                      const EvolutionConfig& cfg);

struct ScoredPolicy {
  MlpPolicy policy;
  double fitness = 0.0;
};

/// Population indices sorted by fitness descending, ties by lower index.
std::vector<std::size_t> rank_by_fitness(std::span<const double> fitness);

/// Next generation: the top m policies unchanged, then n - m mutated
/// offspring whose parents cycle through the survivors in rank order.
std::vector<MlpPolicy> evolve_generation(std::span<const ScoredPolicy> population, const EvolutionConfig& cfg,
                                         std::uint64_t gen_seed);

struct TrainResult {
  MlpPolicy best;
  double best_fitness = 0.0;
  std::vector<GenerationStats> stats;
};

using GenerationCallback = std::function<void(const GenerationStats&)>;

/// Full evolutionary loop; deterministic in cfg regardless of thread count.
TrainResult train(const EvolutionConfig& cfg, const GenerationCallback& on_generation = {});

/// Mean fitness of `policy` over the given tracks.
double evaluate(const MlpPolicy& policy, std::span<const TrackEnv> envs, const EvolutionConfig& cfg);

void write_stats_csv(const std::filesystem::path& path, std::span<const GenerationStats> stats);
std::vector<GenerationStats> read_stats_csv(const std::filesystem::path& path);

}  // namespace raceline
