#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "raceline/errors.hpp"
#include "raceline/policy.hpp"

using namespace raceline;

namespace {

MlpPolicy toy_policy() {
  std::array<DenseLayer, 3> layers;
  layers[0] = {3, 3, {0.5, -0.2, 0.1, 0.3, 0.8, -0.5, -0.7, 0.2, 0.4}, {0.1, -0.1, 0.05}};
  layers[1] = {3, 3, {1.0, -1.0, 0.5, 0.2, 0.3, -0.4, -0.6, 0.9, 0.1}, {0.0, 0.2, -0.3}};
  layers[2] = {3, 2, {0.7, -0.3, 0.2, -0.5, 0.6, 0.9}, {0.05, -0.05}};
  return MlpPolicy(layers);
}

// Reference forward pass with std::tanh and no shared code.
std::vector<double> reference_forward(const MlpPolicy& p, std::vector<double> x) {
  for (const auto& layer : p.layers()) {
    std::vector<double> y(static_cast<std::size_t>(layer.outputs));
    for (int o = 0; o < layer.outputs; ++o) {
      double s = layer.biases[static_cast<std::size_t>(o)];
      for (int i = 0; i < layer.inputs; ++i) {
        s += layer.weights[static_cast<std::size_t>(o * layer.inputs + i)] * x[static_cast<std::size_t>(i)];
      }
      y[static_cast<std::size_t>(o)] = std::tanh(s);
    }
    x = y;
  }
  return x;
}

double sample_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (const double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("zero network outputs zero") {
  const MlpPolicy p(kDefaultLayerSizes);
  const std::vector<double> in(7, 0.7);
  const auto cmd = forward(p, in);
  CHECK(cmd.steer() == 0.0);
  CHECK(cmd.throttle() == 0.0);
}

TEST_CASE("toy network matches hand-computed tanh chain") {
  const auto p = toy_policy();
  const std::vector<double> in{0.2, 0.6, 1.0};
  const auto cmd = forward(p, in);
  // Frozen from an independent evaluation.
  CHECK(std::abs(cmd.steer() - 0.23915283979219046) < 1e-9);
  CHECK(std::abs(cmd.throttle() - -0.5235780807455379) < 1e-9);
}

TEST_CASE("forward agrees with std::tanh reference on random policies") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto p = mutate(random_init(seed), 2.0, seed + 1000);
    std::vector<double> in(7);
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = std::fmod(0.37 * (i + 1) * (seed + 3), 1.0);
    const auto cmd = forward(p, in);
    const auto ref = reference_forward(p, in);
    CHECK(std::abs(cmd.steer() - ref[0]) < 1e-12);
    CHECK(std::abs(cmd.throttle() - ref[1]) < 1e-12);
  }
}

TEST_CASE("forward is deterministic and bounded") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = mutate(random_init(seed), 50.0, seed);
    const std::vector<double> in{1, 0, 1, 0.5, 0.2, 1, 0};
    const auto a = forward(p, in);
    const auto b = forward(p, in);
    CHECK(a.steer() == b.steer());
    CHECK(a.throttle() == b.throttle());
    CHECK(std::abs(a.steer()) <= 1.0);
    CHECK(std::abs(a.throttle()) <= 1.0);
  }
}

TEST_CASE("forward rejects a width mismatch") {
  const MlpPolicy p(kDefaultLayerSizes);
  const std::vector<double> in(6, 0.0);
  CHECK_THROWS_AS(forward(p, in), DomainError);
}

TEST_CASE("policy shape invariants") {
  CHECK_THROWS_AS(MlpPolicy(LayerSizes{7, 16, 16, 3}), DomainError);
  CHECK_THROWS_AS(MlpPolicy(LayerSizes{0, 16, 16, 2}), DomainError);
  auto layers = toy_policy().layers();
  layers[1].inputs = 4;
  CHECK_THROWS_AS(MlpPolicy{layers}, DomainError);
  layers = toy_policy().layers();
  layers[2].biases[0] = NAN;
  CHECK_THROWS_AS(MlpPolicy{layers}, DomainError);

  const MlpPolicy p(kDefaultLayerSizes);
  CHECK(p.layers().size() == 3);
  CHECK(p.input_width() == 7);
  CHECK(p.layer_sizes()[3] == 2);
  CHECK(p.parameter_count() == 7 * 16 + 16 + 16 * 16 + 16 + 16 * 2 + 2);
  CHECK(p.flatten().size() == p.parameter_count());
}

TEST_CASE("random_init is deterministic and seed dependent") {
  CHECK(random_init(5) == random_init(5));
  CHECK_FALSE(random_init(5) == random_init(6));
  const auto p = random_init(9);
  for (const auto& layer : p.layers()) {
    for (const double b : layer.biases) CHECK(b == 0.0);
  }
}

TEST_CASE("random_init weight std per layer") {
  std::array<std::vector<double>, 3> pooled;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto p = random_init(seed, {7, 16, 16, 2});
    for (std::size_t l = 0; l < 3; ++l) {
      const auto& w = p.layers()[l].weights;
      pooled[l].insert(pooled[l].end(), w.begin(), w.end());
    }
  }
  const int fan_in[3] = {7, 16, 16};
  for (std::size_t l = 0; l < 3; ++l) {
    const double expected = 1.0 / std::sqrt(static_cast<double>(fan_in[l]));
    CHECK(std::abs(sample_std(pooled[l]) - expected) < 0.1 * expected);
  }
}

TEST_CASE("mutate with sigma zero is the identity") {
  const auto p = random_init(3);
  CHECK(mutate(p, 0.0, 42) == p);
  CHECK_THROWS_AS(mutate(p, -0.1, 42), DomainError);
}

TEST_CASE("mutate leaves the parent untouched and is deterministic") {
  const auto p = random_init(3);
  const auto copy = p;
  const auto a = mutate(p, 0.1, 42);
  const auto b = mutate(p, 0.1, 42);
  CHECK(p == copy);
  CHECK(a == b);
  CHECK_FALSE(a == mutate(p, 0.1, 43));
}

TEST_CASE("mutate perturbation std over 10k parameters") {
  const auto p = random_init(11, {7, 100, 100, 2});
  REQUIRE(p.parameter_count() >= 10000);
  const auto before = p.flatten();
  const auto after = mutate(p, 0.1, 12).flatten();
  std::vector<double> delta(before.size());
  for (std::size_t i = 0; i < before.size(); ++i) delta[i] = after[i] - before[i];
  const double s = sample_std(delta);
  CHECK(s >= 0.09);
  CHECK(s <= 0.11);
}

TEST_CASE("mutate perturbations are uncorrelated across parameters") {
  // Pearson correlation of neighbouring parameters' perturbations, pooled
  // over 1000 mutations.
  const auto p = random_init(1);
  const auto base = p.flatten();
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  double n = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto child = mutate(p, 0.1, seed).flatten();
    for (std::size_t i = 0; i + 1 < base.size(); ++i) {
      const double x = child[i] - base[i];
      const double y = child[i + 1] - base[i + 1];
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
      n += 1;
    }
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double r = cov / std::sqrt((sxx / n - (sx / n) * (sx / n)) * (syy / n - (sy / n) * (sy / n)));
  CHECK(std::abs(r) < 0.05);
}

TEST_CASE("save and load round trip is bit exact") {
  const auto p = mutate(random_init(21), 0.3, 22);
  std::stringstream buf;
  save_policy(buf, p);
  const auto q = load_policy(buf);
  CHECK(q == p);
  const std::vector<double> in{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  const auto a = forward(p, in);
  const auto b = forward(q, in);
  CHECK(a.steer() == b.steer());
  CHECK(a.throttle() == b.throttle());
}

TEST_CASE("policy file layout") {
  std::stringstream buf;
  save_policy(buf, MlpPolicy(LayerSizes{3, 3, 3, 2}));
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 5) == "RLEV1");
  CHECK(bytes.size() == 5 + 4 + 4 * 4 + 8 * (9 + 3 + 9 + 3 + 6 + 2));
  CHECK(bytes[5] == 4);
  CHECK(bytes[9] == 3);
}

TEST_CASE("malformed policy files are rejected") {
  std::stringstream good;
  save_policy(good, toy_policy());
  const std::string bytes = good.str();

  std::stringstream bad_magic("RLEV2" + bytes.substr(5));
  CHECK_THROWS_AS(load_policy(bad_magic), FormatError);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_policy(truncated), FormatError);

  std::string wrong_count = bytes;
  wrong_count[5] = 3;
  std::stringstream wc(wrong_count);
  CHECK_THROWS_AS(load_policy(wc), FormatError);

  std::string wrong_output = bytes;
  wrong_output[9 + 12] = 5;
  std::stringstream wo(wrong_output);
  CHECK_THROWS_AS(load_policy(wo), FormatError);

  CHECK_THROWS_AS(load_policy(std::filesystem::path("/nonexistent/policy.bin")), FormatError);
}
