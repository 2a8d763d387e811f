#include "raceline/policy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "raceline/errors.hpp"

namespace raceline {

namespace {

constexpr char kMagic[5] = {'R', 'L', 'E', 'V', '1'};
constexpr int kMaxWidth = 1 << 16;

void check_sizes(const LayerSizes& sizes) {
  for (const int s : sizes) {
    if (s <= 0 || s > kMaxWidth) throw DomainError("layer sizes must be positive");
  }
  if (sizes[3] != 2) throw DomainError("policy output width must be 2 (steer, throttle)");
}

DenseLayer zero_layer(int inputs, int outputs) {
  return {inputs, outputs, std::vector<double>(static_cast<std::size_t>(inputs) * outputs, 0.0),
          std::vector<double>(static_cast<std::size_t>(outputs), 0.0)};
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("policy file truncated");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("policy file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

// tanh through exp(-2|x|); agrees with std::tanh to a few ulps and is
// several times cheaper in glibc.
inline double fast_tanh(double x) {
  const double ax = std::abs(x);
  if (ax > 20.0) return std::copysign(1.0, x);
  const double e = std::exp(-2.0 * ax);
  return std::copysign((1.0 - e) / (1.0 + e), x);
}

}  // namespace

MlpPolicy::MlpPolicy(const LayerSizes& sizes) {
  check_sizes(sizes);
  for (std::size_t l = 0; l < 3; ++l) layers_[l] = zero_layer(sizes[l], sizes[l + 1]);
}

MlpPolicy::MlpPolicy(std::array<DenseLayer, 3> layers) : layers_(std::move(layers)) {
  check_sizes(layer_sizes());
  for (std::size_t l = 0; l < 3; ++l) {
    const auto& layer = layers_[l];
    if (l > 0 && layer.inputs != layers_[l - 1].outputs) throw DomainError("policy layer widths do not chain");
    if (layer.weights.size() != static_cast<std::size_t>(layer.inputs) * layer.outputs ||
        layer.biases.size() != static_cast<std::size_t>(layer.outputs)) {
      throw DomainError("policy layer parameter count does not match its shape");
    }
    for (const double w : layer.weights) {
      if (!std::isfinite(w)) throw DomainError("policy weights must be finite");
    }
    for (const double b : layer.biases) {
      if (!std::isfinite(b)) throw DomainError("policy biases must be finite");
    }
  }
}

LayerSizes MlpPolicy::layer_sizes() const {
  return {layers_[0].inputs, layers_[1].inputs, layers_[2].inputs, layers_[2].outputs};
}

std::size_t MlpPolicy::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

std::vector<double> MlpPolicy::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.weights.begin(), l.weights.end());
    out.insert(out.end(), l.biases.begin(), l.biases.end());
  }
  return out;
}

ControlCommand forward(const MlpPolicy& policy, std::span<const double> inputs) {
  if (inputs.size() != static_cast<std::size_t>(policy.input_width())) {
    throw DomainError("forward: input width mismatch");
  }
  thread_local std::vector<double> a;
  thread_local std::vector<double> b;
  a.assign(inputs.begin(), inputs.end());
  for (const auto& layer : policy.layers()) {
    b.resize(static_cast<std::size_t>(layer.outputs));
    const double* w = layer.weights.data();
    for (int o = 0; o < layer.outputs; ++o) {
      double sum = layer.biases[static_cast<std::size_t>(o)];
      for (int i = 0; i < layer.inputs; ++i) sum += w[i] * a[static_cast<std::size_t>(i)];
      w += layer.inputs;
      b[static_cast<std::size_t>(o)] = fast_tanh(sum);
    }
    std::swap(a, b);
  }
  return ControlCommand(a[0], a[1]);
}

MlpPolicy random_init(std::uint64_t seed, const LayerSizes& sizes) {
  MlpPolicy policy(sizes);
  std::mt19937_64 rng(seed);
  for (auto& layer : policy.mutable_layers()) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(layer.inputs)));
    for (auto& w : layer.weights) w = normal(rng);
  }
  return policy;
}

MlpPolicy mutate(const MlpPolicy& policy, double sigma, std::uint64_t rng_seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("mutate: sigma must be >= 0");
  MlpPolicy child = policy;
  if (sigma == 0.0) return child;
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& layer : child.mutable_layers()) {
    for (auto& w : layer.weights) w += noise(rng);
    for (auto& b : layer.biases) b += noise(rng);
  }
  return child;
}

void save_policy(std::ostream& out, const MlpPolicy& policy) {
  out.write(kMagic, sizeof(kMagic));
  const auto sizes = policy.layer_sizes();
  write_u32(out, static_cast<std::uint32_t>(sizes.size()));
  for (const int s : sizes) write_u32(out, static_cast<std::uint32_t>(s));
  for (const auto& layer : policy.layers()) {
    for (const double w : layer.weights) write_f64(out, w);
    for (const double b : layer.biases) write_f64(out, b);
  }
  if (!out) throw FormatError("failed writing policy");
}

MlpPolicy load_policy(std::istream& in) {
  char magic[5];
  if (!in.read(magic, 5) || std::memcmp(magic, kMagic, 5) != 0) throw FormatError("not an RLEV1 policy file");
  const std::uint32_t count = read_u32(in);
  if (count != 4) throw FormatError("policy must have 4 layer sizes");
  LayerSizes sizes{};
  for (auto& s : sizes) {
    const std::uint32_t v = read_u32(in);
    if (v == 0 || v > static_cast<std::uint32_t>(kMaxWidth)) throw FormatError("bad layer size in policy file");
    s = static_cast<int>(v);
  }
  std::array<DenseLayer, 3> layers;
  for (std::size_t l = 0; l < 3; ++l) {
    layers[l] = zero_layer(sizes[l], sizes[l + 1]);
    for (auto& w : layers[l].weights) w = read_f64(in);
    for (auto& b : layers[l].biases) b = read_f64(in);
  }
  try {
    return MlpPolicy(std::move(layers));
  } catch (const DomainError& e) {
    throw FormatError(std::string("invalid policy file: ") + e.what());
  }
}

void save_policy(const std::filesystem::path& path, const MlpPolicy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  save_policy(out, policy);
}

MlpPolicy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_policy(in);
}

}  // namespace raceline
