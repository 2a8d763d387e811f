#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "raceline/evolve.hpp"
#include "raceline/geometry.hpp"
#include "raceline/policy.hpp"
#include "raceline/track.hpp"
#include "raceline/vehicle.hpp"

namespace raceline {

/// Lateral offsets of a planned path sampled at forward distances
/// y_step, 2 * y_step, ..., k * y_step in the vehicle frame of `frame`.
/// The vehicle frame has +y along the heading and +x along
/// BicycleState::lateral().
struct TrajectoryEmbedding {
  int k = 0;
  double y_step = 0.0;
  std::vector<double> xs;
  BicycleState frame;

  friend bool operator==(const TrajectoryEmbedding&, const TrajectoryEmbedding&) = default;
};

Point2 to_vehicle_frame(const BicycleState& frame, Point2 world);
Point2 to_world_frame(const BicycleState& frame, Point2 local);

/// Sample i (0-based) of the embedding in world coordinates.
Point2 embedding_point(const TrajectoryEmbedding& e, int i);

/// Fits a cubic to the monotone-forward prefix of `path` (world frame) and
/// samples it at regular forward intervals.
///
/// Throws DomainError for k < 1 or y_step <= 0 and HorizonError when the
/// prefix is too short to cover k * y_step or its fit is not monotone.
TrajectoryEmbedding path_to_embedding(std::span<const Point2> path, const BicycleState& pose, int k, double y_step);

struct OracleConfig {
  int k = 10;
  double y_step = 15.0;
  int horizon_steps = 200;
  double dt = 0.05;
  VehicleParams vehicle;
  SensorConfig sensor;
};

/// Rolls the policy forward from `pose` (stopping once the horizon is
/// covered) and embeds the driven path. Throws DomainError if the pose is
/// off-track, HorizonError if the drive falls short.
TrajectoryEmbedding oracle_generate(const MlpPolicy& policy, const OccupancyGrid& grid, const BicycleState& pose,
                                    const OracleConfig& cfg);

struct ExportConfig {
  OracleConfig oracle;
  TrackParams track;
  int crop_size = 128;
  unsigned threads = 0;
};

struct ManifestRow {
  std::string crop_path;  // relative to the dataset directory
  int embedding_row = 0;
  std::uint64_t track_seed = 0;
  double pose_x = 0.0;
  double pose_y = 0.0;
  double pose_yaw = 0.0;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct Manifest {
  std::vector<ManifestRow> rows;
  int attempted = 0;
  int skipped = 0;
};

/// Vehicle-aligned local window: forward is up, lateral +x is right. Pixel
/// (r, c) samples local point (c - (n-1)/2, (n-1)/2 - r). 255 drivable, 0 not.
std::vector<std::uint8_t> crop_grid(const OccupancyGrid& grid, const BicycleState& pose, int size);

/// Writes OGM crops, embeddings and a manifest for evenly spaced poses on
/// each track. Layout under out_dir:
///   manifest.csv, embeddings.csv, dataset.meta,
///   crops/s<seed>_<index>.pgm, tracks/track_<seed>.pgm (+ .meta)
/// Poses whose planning fails are logged and skipped. Nothing is written
/// when samples_per_track is 0. Throws ExportError when every pose failed.
Manifest export_dataset(const MlpPolicy& policy, std::span<const std::uint64_t> track_seeds, int samples_per_track,
                        const std::filesystem::path& out_dir, const ExportConfig& cfg);

/// Reads manifest.csv and embeddings.csv back from a dataset directory.
struct LoadedDataset {
  std::vector<ManifestRow> rows;
  std::vector<std::vector<double>> embeddings;
  int k = 0;
  double y_step = 0.0;
};

LoadedDataset load_dataset(const std::filesystem::path& dir);

}  // namespace raceline
