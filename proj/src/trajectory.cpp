#include "raceline/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include "raceline/config.hpp"
#include "raceline/errors.hpp"
#include "raceline/parallel.hpp"
#include "raceline/pgm.hpp"

namespace raceline {

Point2 to_vehicle_frame(const BicycleState& frame, Point2 world) {
  const Point2 d = world - frame.position();
  return {dot(d, frame.lateral()), dot(d, frame.heading())};
}

Point2 to_world_frame(const BicycleState& frame, Point2 local) {
  return frame.position() + local.x * frame.lateral() + local.y * frame.heading();
}

Point2 embedding_point(const TrajectoryEmbedding& e, int i) {
  return to_world_frame(e.frame, {e.xs.at(static_cast<std::size_t>(i)), (i + 1) * e.y_step});
}

namespace {

constexpr int kMinFitPoints = 4;

// Monotone-forward prefix in the vehicle frame, cut one y_step past the
// horizon when the path gets that far. Stationary samples are dropped.
std::vector<Point2> forward_prefix(std::span<const Point2> path, const BicycleState& pose, double horizon,
                                   double overshoot) {
  std::vector<Point2> out;
  out.reserve(path.size());
  for (const auto& w : path) {
    const Point2 p = to_vehicle_frame(pose, w);
    if (!out.empty()) {
      if (p.y < out.back().y) break;
      if (p.y == out.back().y) continue;
    }
    out.push_back(p);
    if (p.y >= horizon + overshoot) break;
  }
  return out;
}

// A least-squares cubic can bend back in y near its far end even when the
// samples do not. Keep the leading part that is non-decreasing at the
// resampler's check resolution.
BezierCurve monotone_lead(const BezierCurve& curve) {
  constexpr int kSamples = 256;
  double prev = bezier_eval(curve, 0.0).y;
  for (int i = 1; i <= kSamples; ++i) {
    const double y = bezier_eval(curve, static_cast<double>(i) / kSamples).y;
    if (y < prev) {
      if (i < 3) return curve;
      return bezier_split(curve, static_cast<double>(i - 2) / kSamples).first;
    }
    prev = y;
  }
  return curve;
}

}  // namespace

TrajectoryEmbedding path_to_embedding(std::span<const Point2> path, const BicycleState& pose, int k, double y_step) {
  if (k < 1) throw DomainError("path_to_embedding: k must be >= 1");
  if (!(y_step > 0.0) || !std::isfinite(y_step)) throw DomainError("path_to_embedding: y_step must be > 0");
  const double horizon = k * y_step;
  const auto local = forward_prefix(path, pose, horizon, y_step);
  const int survived = static_cast<int>(path.size()) - 1;
  if (local.size() < kMinFitPoints || local.back().y < horizon) {
    throw HorizonError("path does not reach the embedding horizon", survived);
  }

  std::vector<double> ys(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) ys[static_cast<std::size_t>(i)] = (i + 1) * y_step;

  TrajectoryEmbedding e{k, y_step, {}, pose};
  try {
    e.xs = resample_at_y(monotone_lead(bezier_fit(local, 3)), ys);
  } catch (const DomainError& err) {
    throw HorizonError(std::string("fitted path unusable: ") + err.what(), survived);
  } catch (const FitError& err) {
    throw HorizonError(std::string("fitted path unusable: ") + err.what(), survived);
  }
  return e;
}

TrajectoryEmbedding oracle_generate(const MlpPolicy& policy, const OccupancyGrid& grid, const BicycleState& pose,
                                    const OracleConfig& cfg) {
  if (!is_on_track(grid, pose.position())) throw DomainError("oracle_generate: pose is off-track");
  const double stop_y = (cfg.k + 1) * cfg.y_step;
  double max_y = 0.0;
  const auto stop = [&](const BicycleState& s) {
    const double y = to_vehicle_frame(pose, s.position()).y;
    if (y < max_y) return true;
    max_y = y;
    return y >= stop_y;
  };
  const Drive drive =
      drive_policy(policy, grid, pose, cfg.vehicle, cfg.sensor, cfg.dt, cfg.horizon_steps, stop);
  std::vector<Point2> path;
  path.reserve(drive.states.size());
  for (const auto& s : drive.states) path.push_back(s.position());
  return path_to_embedding(path, pose, cfg.k, cfg.y_step);
}

std::vector<std::uint8_t> crop_grid(const OccupancyGrid& grid, const BicycleState& pose, int size) {
  if (size < 1) throw DomainError("crop_grid: size must be >= 1");
  const double half = 0.5 * (size - 1);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(size) * size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const Point2 w = to_world_frame(pose, {c - half, half - r});
      out[static_cast<std::size_t>(r) * size + c] = is_on_track(grid, w) ? 255 : 0;
    }
  }
  return out;
}

namespace {

struct Sample {
  std::size_t track = 0;
  int index = 0;
  BicycleState pose;
  std::optional<TrajectoryEmbedding> embedding;
  std::string failure;
};

}  // namespace

Manifest export_dataset(const MlpPolicy& policy, std::span<const std::uint64_t> track_seeds, int samples_per_track,
                        const std::filesystem::path& out_dir, const ExportConfig& cfg) {
  if (samples_per_track < 0) throw DomainError("export_dataset: samples_per_track must be >= 0");
  Manifest manifest;
  if (samples_per_track == 0 || track_seeds.empty()) return manifest;

  std::vector<TrackEnv> envs;
  for (const auto seed : track_seeds) envs.push_back(make_track_env(seed, cfg.track));

  std::vector<Sample> samples;
  for (std::size_t t = 0; t < envs.size(); ++t) {
    const Centerline line(envs[t].spec, 0.5);
    for (int j = 0; j < samples_per_track; ++j) {
      const double s = line.length() * j / samples_per_track;
      const Point2 p = line.point_at(s);
      samples.push_back({t, j, BicycleState{p.x, p.y, wrap_angle(line.heading_at(s)), 0.0, 0.0}, {}, {}});
    }
  }

  parallel_for(samples.size(), cfg.threads, [&](std::size_t i) {
    auto& sample = samples[i];
    try {
      sample.embedding = oracle_generate(policy, envs[sample.track].grid, sample.pose, cfg.oracle);
    } catch (const HorizonError& e) {
      sample.failure = std::string(e.what()) + " (steps survived " + std::to_string(e.steps_survived()) + ")";
    } catch (const DomainError& e) {
      sample.failure = e.what();
    }
  });

  manifest.attempted = static_cast<int>(samples.size());
  const bool any = std::any_of(samples.begin(), samples.end(), [](const Sample& s) { return s.embedding.has_value(); });
  if (!any) throw ExportError("export_dataset: every pose failed to plan");

  std::filesystem::create_directories(out_dir / "crops");
  std::filesystem::create_directories(out_dir / "tracks");
  for (std::size_t t = 0; t < envs.size(); ++t) {
    const auto& spec = envs[t].spec;
    save_grid(out_dir / "tracks" / ("track_" + std::to_string(spec.seed) + ".pgm"), envs[t].grid,
              {spec.seed, spec.width, spec.px_per_meter});
  }

  std::ofstream embeddings(out_dir / "embeddings.csv");
  if (!embeddings) throw ExportError("cannot write embeddings.csv in " + out_dir.string());
  for (int i = 0; i < cfg.oracle.k; ++i) embeddings << (i > 0 ? "," : "") << 'x' << (i + 1);
  embeddings << '\n';

  for (const auto& sample : samples) {
    const std::uint64_t seed = envs[sample.track].spec.seed;
    if (!sample.embedding) {
      std::clog << "export: skipping track " << seed << " sample " << sample.index << ": " << sample.failure << '\n';
      ++manifest.skipped;
      continue;
    }
    ManifestRow row;
    row.crop_path = "crops/s" + std::to_string(seed) + "_" + std::to_string(sample.index) + ".pgm";
    row.embedding_row = static_cast<int>(manifest.rows.size());
    row.track_seed = seed;
    row.pose_x = sample.pose.x;
    row.pose_y = sample.pose.y;
    row.pose_yaw = sample.pose.yaw;
    write_pgm(out_dir / row.crop_path,
              {cfg.crop_size, cfg.crop_size, crop_grid(envs[sample.track].grid, sample.pose, cfg.crop_size)});
    const auto& xs = sample.embedding->xs;
    for (std::size_t i = 0; i < xs.size(); ++i) embeddings << (i > 0 ? "," : "") << format_double(xs[i]);
    embeddings << '\n';
    manifest.rows.push_back(std::move(row));
  }
  if (!embeddings) throw ExportError("write failed for embeddings.csv");

  std::ofstream out(out_dir / "manifest.csv");
  if (!out) throw ExportError("cannot write manifest.csv in " + out_dir.string());
  out << "crop_path,embedding_row_index,track_seed,pose_x,pose_y,pose_yaw\n";
  for (const auto& r : manifest.rows) {
    out << r.crop_path << ',' << r.embedding_row << ',' << r.track_seed << ',' << format_double(r.pose_x) << ','
        << format_double(r.pose_y) << ',' << format_double(r.pose_yaw) << '\n';
  }
  if (!out) throw ExportError("write failed for manifest.csv");

  KeyValues meta;
  meta.set("k", std::to_string(cfg.oracle.k));
  meta.set("y_step", format_double(cfg.oracle.y_step));
  meta.set("crop_size", std::to_string(cfg.crop_size));
  meta.save(out_dir / "dataset.meta");
  return manifest;
}

LoadedDataset load_dataset(const std::filesystem::path& dir) {
  LoadedDataset data;
  const KeyValues meta = KeyValues::load(dir / "dataset.meta");
  data.k = meta.get_int("k", 0);
  data.y_step = meta.get_double("y_step", 0.0);

  std::ifstream manifest(dir / "manifest.csv");
  if (!manifest) throw FormatError("cannot open manifest.csv in " + dir.string());
  std::string line;
  std::getline(manifest, line);
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 6) throw FormatError("manifest.csv: expected 6 columns");
    data.rows.push_back({cells[0], parse_int(cells[1], "embedding_row_index"), parse_u64(cells[2], "track_seed"),
                         parse_double(cells[3], "pose_x"), parse_double(cells[4], "pose_y"),
                         parse_double(cells[5], "pose_yaw")});
  }

  std::ifstream embeddings(dir / "embeddings.csv");
  if (!embeddings) throw FormatError("cannot open embeddings.csv in " + dir.string());
  std::getline(embeddings, line);
  while (std::getline(embeddings, line)) {
    if (line.empty()) continue;
    std::vector<double> xs;
    for (const auto& cell : split_csv_line(line)) xs.push_back(parse_double(cell, "embedding"));
    if (static_cast<int>(xs.size()) != data.k) throw FormatError("embeddings.csv: row width differs from k");
    data.embeddings.push_back(std::move(xs));
  }
  return data;
}

}  // namespace raceline
