#include "raceline/pgm.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "raceline/config.hpp"
#include "raceline/errors.hpp"

namespace raceline {

namespace {

void skip_space_and_comments(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      in.get();
    } else {
      return;
    }
  }
}

int read_header_int(std::istream& in, const std::filesystem::path& path) {
  skip_space_and_comments(in);
  int v = 0;
  if (!(in >> v) || v <= 0) throw FormatError("bad PGM header in " + path.string());
  return v;
}

void write_binary(const std::filesystem::path& path, const std::string& header,
                  const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << header;
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.rows) * image.cols) {
    throw DomainError("write_pgm: pixel count does not match size");
  }
  write_binary(path, "P5\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) + "\n255\n",
               image.pixels);
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.rows) * image.cols * 3) {
    throw DomainError("write_ppm: pixel count does not match size");
  }
  write_binary(path, "P6\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) + "\n255\n",
               image.pixels);
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P5") throw FormatError(path.string() + " is not a binary PGM");
  GrayImage img;
  img.cols = read_header_int(in, path);
  img.rows = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  if (maxval != 255) throw FormatError("only maxval 255 PGM files are supported");
  in.get();  // single whitespace before the raster
  img.pixels.resize(static_cast<std::size_t>(img.rows) * img.cols);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw FormatError("truncated raster in " + path.string());
  }
  return img;
}

std::filesystem::path meta_path_for(const std::filesystem::path& pgm_path) {
  auto p = pgm_path;
  p.replace_extension(".meta");
  return p;
}

void save_grid(const std::filesystem::path& path, const OccupancyGrid& grid, const GridMeta& meta) {
  GrayImage img{grid.rows(), grid.cols(), {}};
  img.pixels.reserve(grid.cells().size());
  for (const auto c : grid.cells()) img.pixels.push_back(c != 0 ? 255 : 0);
  write_pgm(path, img);

  KeyValues kv;
  kv.set("seed", std::to_string(meta.seed));
  kv.set("width", format_double(meta.width));
  kv.set("px_per_meter", format_double(meta.px_per_meter));
  kv.save(meta_path_for(path));
}

LoadedGrid load_grid(const std::filesystem::path& path) {
  const GrayImage img = read_pgm(path);
  std::vector<std::uint8_t> cells;
  cells.reserve(img.pixels.size());
  for (const auto p : img.pixels) {
    if (p != 0 && p != 255) throw FormatError(path.string() + " is not a binarized grid");
    cells.push_back(p == 255 ? 1 : 0);
  }
  GridMeta meta;
  const auto sidecar = meta_path_for(path);
  if (std::filesystem::exists(sidecar)) {
    const KeyValues kv = KeyValues::load(sidecar);
    meta.seed = kv.get_u64("seed", meta.seed);
    meta.width = kv.get_double("width", meta.width);
    meta.px_per_meter = kv.get_double("px_per_meter", meta.px_per_meter);
  }
  return {OccupancyGrid(img.rows, img.cols, std::move(cells), meta.px_per_meter), meta};
}

}  // namespace raceline
