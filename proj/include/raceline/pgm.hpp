#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "raceline/track.hpp"

namespace raceline {

/// 8-bit grayscale raster as stored in a binary PGM (P5).
struct GrayImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 bytes per pixel
};

void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

/// Sidecar metadata written next to a track grid.
struct GridMeta {
  std::uint64_t seed = 0;
  double width = 0.0;
  double px_per_meter = 10.0;
};

/// `track.pgm` -> `track.meta`.
std::filesystem::path meta_path_for(const std::filesystem::path& pgm_path);

/// Writes the grid as P5 (255 drivable, 0 off-track) plus the sidecar file.
void save_grid(const std::filesystem::path& path, const OccupancyGrid& grid, const GridMeta& meta);

struct LoadedGrid {
  OccupancyGrid grid;
  GridMeta meta;
};

/// Reads a grid written by save_grid. Missing sidecar keeps default metadata.
LoadedGrid load_grid(const std::filesystem::path& path);

}  // namespace raceline
