#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "raceline/errors.hpp"
#include "raceline/pgm.hpp"
#include "raceline/trajectory.hpp"

using namespace raceline;
namespace fs = std::filesystem;

namespace {

// Arc of radius R curving toward +x in the vehicle frame of `pose`.
std::vector<Point2> arc_path(const BicycleState& pose, double radius, double max_angle, int n) {
  std::vector<Point2> out;
  for (int i = 0; i <= n; ++i) {
    const double phi = max_angle * i / n;
    out.push_back(to_world_frame(pose, {radius - radius * std::cos(phi), radius * std::sin(phi)}));
  }
  return out;
}

std::vector<Point2> straight_path(const BicycleState& pose, double length, int n) {
  std::vector<Point2> out;
  for (int i = 0; i <= n; ++i) out.push_back(to_world_frame(pose, {0.0, length * i / n}));
  return out;
}

// Vertical corridor: cols [lo, hi] drivable on every row.
OccupancyGrid corridor(int rows, int cols, int lo, int hi) {
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(rows) * cols, 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = lo; c <= hi; ++c) cells[static_cast<std::size_t>(r) * cols + c] = 1;
  }
  return OccupancyGrid(rows, cols, std::move(cells));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("raceline_" + name);
  fs::remove_all(dir);
  return dir;
}

const TrackEnv& env1() {
  static const TrackEnv env = make_track_env(1, TrackParams{});
  return env;
}

}  // namespace

TEST_CASE("vehicle frame conversions are inverse") {
  const BicycleState pose{120.0, 80.0, 0.7, 3.0, 0.0};
  const Point2 w{200.5, -13.0};
  const Point2 back = to_world_frame(pose, to_vehicle_frame(pose, w));
  CHECK(std::abs(back.x - w.x) < 1e-12);
  CHECK(std::abs(back.y - w.y) < 1e-12);
  const Point2 ahead = to_vehicle_frame(pose, pose.position() + 10.0 * pose.heading());
  CHECK(std::abs(ahead.x) < 1e-12);
  CHECK(std::abs(ahead.y - 10.0) < 1e-12);
  const Point2 side = to_vehicle_frame(pose, pose.position() + 4.0 * pose.lateral());
  CHECK(std::abs(side.x - 4.0) < 1e-12);
}

TEST_CASE("straight path embeds to zeros") {
  const BicycleState pose{50.0, 400.0, -1.1, 0.0, 0.0};
  const auto path = straight_path(pose, 200.0, 40);
  const auto e = path_to_embedding(path, pose, 10, 15.0);
  CHECK(e.k == 10);
  CHECK(e.y_step == 15.0);
  CHECK(e.frame == pose);
  REQUIRE(e.xs.size() == 10);
  for (const double x : e.xs) CHECK(std::abs(x) < 1e-6);
}

TEST_CASE("arc path matches circle geometry") {
  const double radius = 300.0;
  const BicycleState pose{256.0, 256.0, 0.3, 0.0, 0.0};
  const auto path = arc_path(pose, radius, 0.7, 60);
  const auto e = path_to_embedding(path, pose, 10, 15.0);
  for (int i = 1; i <= 10; ++i) {
    const double y = i * 15.0;
    if (y > radius / 2) break;
    const double expected = radius - std::sqrt(radius * radius - y * y);
    CHECK(std::abs(e.xs[static_cast<std::size_t>(i - 1)] - expected) <= 0.02 * expected);
  }
}

TEST_CASE("embedding is invariant under rigid motion") {
  const BicycleState pose{0.0, 0.0, 0.0, 0.0, 0.0};
  const auto path = arc_path(pose, 220.0, 0.9, 50);
  const auto ref = path_to_embedding(path, pose, 10, 15.0);
  for (const double angle : {0.4, 1.9, -2.6, 3.1}) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const Point2 shift{311.0, -47.0};
    const auto move = [&](Point2 p) { return Point2{c * p.x - s * p.y + shift.x, s * p.x + c * p.y + shift.y}; };
    std::vector<Point2> moved;
    for (const auto& p : path) moved.push_back(move(p));
    BicycleState moved_pose = pose;
    moved_pose.x = move(pose.position()).x;
    moved_pose.y = move(pose.position()).y;
    moved_pose.yaw = wrap_angle(pose.yaw + angle);
    const auto e = path_to_embedding(moved, moved_pose, 10, 15.0);
    for (std::size_t i = 0; i < 10; ++i) CHECK(std::abs(e.xs[i] - ref.xs[i]) < 1e-6);
  }
}

TEST_CASE("path is truncated at its first reversal") {
  const BicycleState pose{0.0, 0.0, std::numbers::pi / 2, 0.0, 0.0};
  auto path = straight_path(pose, 200.0, 40);
  // Turning back after the horizon must not affect the embedding.
  for (int i = 1; i <= 20; ++i) path.push_back(to_world_frame(pose, {-5.0 * i, 200.0 - 8.0 * i}));
  const auto e = path_to_embedding(path, pose, 10, 15.0);
  for (const double x : e.xs) CHECK(std::abs(x) < 1e-6);

  // Reversing before the horizon leaves too little forward extent.
  auto early = straight_path(pose, 100.0, 20);
  for (int i = 1; i <= 20; ++i) early.push_back(to_world_frame(pose, {3.0 * i, 100.0 - 2.0 * i}));
  for (int i = 1; i <= 40; ++i) early.push_back(to_world_frame(pose, {60.0, 60.0 + 10.0 * i}));
  CHECK_THROWS_AS(path_to_embedding(early, pose, 10, 15.0), HorizonError);
}

TEST_CASE("path_to_embedding errors") {
  const BicycleState pose{0.0, 0.0, 0.0, 0.0, 0.0};
  const auto path = straight_path(pose, 200.0, 40);
  CHECK_THROWS_AS(path_to_embedding(path, pose, 0, 15.0), DomainError);
  CHECK_THROWS_AS(path_to_embedding(path, pose, 10, 0.0), DomainError);
  CHECK_THROWS_AS(path_to_embedding(path, pose, 10, NAN), DomainError);
  CHECK_THROWS_AS(path_to_embedding(path, pose, 20, 15.0), HorizonError);
  const std::vector<Point2> three{{0, 0}, {100, 0}, {200, 0}};
  CHECK_THROWS_AS(path_to_embedding(three, pose, 10, 15.0), HorizonError);
  try {
    path_to_embedding(straight_path(pose, 60.0, 12), pose, 10, 15.0);
    FAIL("expected HorizonError");
  } catch (const HorizonError& e) {
    CHECK(e.steps_survived() == 12);
  }
}

TEST_CASE("shorter embeddings are prefixes of the same fit region") {
  const BicycleState pose{0.0, 0.0, 0.0, 0.0, 0.0};
  const auto path = arc_path(pose, 400.0, 0.6, 60);
  const auto e = path_to_embedding(path, pose, 5, 15.0);
  CHECK(e.xs.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    const double y = (i + 1) * 15.0;
    CHECK(std::abs(e.xs[i] - (400.0 - std::sqrt(400.0 * 400.0 - y * y))) < 0.02 * (400.0 - std::sqrt(400.0 * 400.0 - y * y)));
  }
}

TEST_CASE("zero policy oracle raises a horizon error") {
  const MlpPolicy zero(kDefaultLayerSizes);
  OracleConfig cfg;
  try {
    oracle_generate(zero, env1().grid, env1().start, cfg);
    FAIL("expected HorizonError");
  } catch (const HorizonError& e) {
    CHECK(e.steps_survived() >= 0);
  }
  BicycleState off = env1().start;
  off.x = 0.0;
  off.y = 0.0;
  CHECK_THROWS_AS(oracle_generate(zero, env1().grid, off, cfg), DomainError);
}

TEST_CASE("oracle is deterministic and stays on the track") {
  const auto& policy = fixture::quick_policy();
  OracleConfig cfg;
  const Centerline line(env1().spec, 0.5);
  int ok = 0;
  for (int j = 0; j < 20; ++j) {
    const double s = line.length() * j / 20;
    const Point2 p = line.point_at(s);
    const BicycleState pose{p.x, p.y, line.heading_at(s), 0.0, 0.0};
    try {
      const auto a = oracle_generate(policy, env1().grid, pose, cfg);
      const auto b = oracle_generate(policy, env1().grid, pose, cfg);
      CHECK(a == b);
      CHECK(oracle::embedding_contained(env1().grid, pose, a.xs, a.y_step));
      ++ok;
    } catch (const HorizonError&) {
    }
  }
  CHECK(ok >= 10);
}

TEST_CASE("oracle stays within a straight corridor") {
  const auto grid = corridor(700, 200, 70, 130);
  const auto& policy = fixture::quick_policy();
  OracleConfig cfg;
  const BicycleState pose{100.0, 650.0, -std::numbers::pi / 2, 0.0, 0.0};
  const auto e = oracle_generate(policy, grid, pose, cfg);
  for (const double x : e.xs) CHECK(std::abs(x) < 30.0);
}

TEST_CASE("crop is vehicle aligned") {
  // Drivable left half of the world.
  std::vector<std::uint8_t> cells(100 * 100, 0);
  for (int r = 0; r < 100; ++r) {
    for (int c = 0; c < 50; ++c) cells[static_cast<std::size_t>(r) * 100 + c] = 1;
  }
  const OccupancyGrid grid(100, 100, cells);
  const int n = 21;

  // Heading up the image: world left stays on the crop's left.
  const auto up = crop_grid(grid, {50.0, 50.0, -std::numbers::pi / 2, 0.0, 0.0}, n);
  CHECK(up[10 * n + 0] == 255);
  CHECK(up[10 * n + n - 1] == 0);
  CHECK(up[0] == 255);
  CHECK(up[n - 1] == 0);

  // Heading along world +x: the drivable half is behind, at the crop bottom.
  const auto east = crop_grid(grid, {50.0, 50.0, 0.0, 0.0, 0.0}, n);
  CHECK(east[0 * n + 10] == 0);
  CHECK(east[(n - 1) * n + 10] == 255);

  CHECK_THROWS_AS(crop_grid(grid, {}, 0), DomainError);
}

TEST_CASE("export with zero samples writes nothing") {
  const auto dir = scratch_dir("export_empty");
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto m = export_dataset(fixture::quick_policy(), seeds, 0, dir, ExportConfig{});
  CHECK(m.rows.empty());
  CHECK(m.attempted == 0);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("export accounting, containment and determinism") {
  const auto dir = scratch_dir("export_a");
  const auto dir2 = scratch_dir("export_b");
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  ExportConfig cfg;
  const auto m = export_dataset(fixture::quick_policy(), seeds, 10, dir, cfg);
  CHECK(m.attempted == 30);
  CHECK(static_cast<int>(m.rows.size()) + m.skipped == 30);
  REQUIRE(!m.rows.empty());

  std::size_t crops = 0;
  for (const auto& entry : fs::directory_iterator(dir / "crops")) crops += entry.is_regular_file() ? 1 : 0;
  CHECK(crops == m.rows.size());

  const auto data = load_dataset(dir);
  CHECK(data.rows == m.rows);
  REQUIRE(data.embeddings.size() == m.rows.size());
  CHECK(data.k == cfg.oracle.k);
  CHECK(data.y_step == cfg.oracle.y_step);

  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto& row = data.rows[i];
    CHECK(row.embedding_row == static_cast<int>(i));
    const auto track = load_grid(dir / "tracks" / ("track_" + std::to_string(row.track_seed) + ".pgm"));
    const BicycleState pose{row.pose_x, row.pose_y, row.pose_yaw, 0.0, 0.0};
    CHECK(oracle::embedding_contained(track.grid, pose, data.embeddings[i], data.y_step));
    const auto crop = read_pgm(dir / row.crop_path);
    CHECK(crop.rows == cfg.crop_size);
    CHECK(crop.cols == cfg.crop_size);
    CHECK(crop.pixels == crop_grid(track.grid, pose, cfg.crop_size));
  }

  export_dataset(fixture::quick_policy(), seeds, 10, dir2, cfg);
  for (const char* name : {"manifest.csv", "embeddings.csv", "dataset.meta"}) {
    CHECK(slurp(dir / name) == slurp(dir2 / name));
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("export fails when no pose can be planned") {
  const auto dir = scratch_dir("export_fail");
  const std::vector<std::uint64_t> seeds{1};
  CHECK_THROWS_AS(export_dataset(MlpPolicy(kDefaultLayerSizes), seeds, 3, dir, ExportConfig{}), ExportError);
  CHECK_THROWS_AS(export_dataset(MlpPolicy(kDefaultLayerSizes), seeds, -1, dir, ExportConfig{}), DomainError);
  fs::remove_all(dir);
}
