#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "raceline/vehicle.hpp"

namespace raceline {

/// One dense layer y = tanh(W x + b). W is row-major, rows = outputs.
struct DenseLayer {
  int inputs = 0;
  int outputs = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Widths [n_v, h1, h2, 2]: three weight layers, two tanh hidden layers and a
/// tanh output read as (steer, throttle).
using LayerSizes = std::array<int, 4>;

inline constexpr LayerSizes kDefaultLayerSizes{7, 16, 16, 2};

class MlpPolicy {
 public:
  /// All-zero network of the given shape.
  explicit MlpPolicy(const LayerSizes& sizes);
  /// Throws DomainError when shapes disagree or a parameter is not finite.
  explicit MlpPolicy(std::array<DenseLayer, 3> layers);

  LayerSizes layer_sizes() const;
  int input_width() const { return layers_[0].inputs; }
  const std::array<DenseLayer, 3>& layers() const { return layers_; }
  std::array<DenseLayer, 3>& mutable_layers() { return layers_; }

  std::size_t parameter_count() const;
  /// Flat view order: layer 0 weights, layer 0 biases, layer 1 weights, ...
  std::vector<double> flatten() const;

  friend bool operator==(const MlpPolicy&, const MlpPolicy&) = default;

 private:
  std::array<DenseLayer, 3> layers_;
};

/// Forward pass on inputs already scaled to [0, 1] (distances / L).
/// Throws DomainError on a width mismatch.
ControlCommand forward(const MlpPolicy& policy, std::span<const double> inputs);

/// Weights ~ Normal(0, 1/fan_in), biases zero. Deterministic in seed.
MlpPolicy random_init(std::uint64_t seed, const LayerSizes& sizes = kDefaultLayerSizes);

/// Copy with every weight and bias perturbed by Normal(0, sigma^2) noise.
MlpPolicy mutate(const MlpPolicy& policy, double sigma, std::uint64_t rng_seed);

// Binary format: "RLEV1", u32 count of layer sizes, u32 sizes, then per layer
// the row-major f64 weights followed by the f64 biases. Little-endian.
void save_policy(std::ostream& out, const MlpPolicy& policy);
MlpPolicy load_policy(std::istream& in);
void save_policy(const std::filesystem::path& path, const MlpPolicy& policy);
MlpPolicy load_policy(const std::filesystem::path& path);

}  // namespace raceline
