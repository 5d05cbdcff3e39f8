#include "lifted/init.hpp"

#include <cmath>
#include <random>

#include "lifted/random.hpp"

namespace lifted {

namespace {
Rng rng_for(std::uint64_t seed, const std::string& name) {
  return Rng(derive_seed(derive_seed(seed, Stream::kInit), name));
}
}  // namespace

Tensor Initializer::normal(const std::string& name, Shape shape, double stddev, bool trainable) {
  auto rng = rng_for(seed_, name);
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return store_.add(name, Tensor::from(std::move(shape), std::move(v)), trainable);
}

Tensor Initializer::uniform(const std::string& name, Shape shape, double bound, bool trainable) {
  auto rng = rng_for(seed_, name);
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return store_.add(name, Tensor::from(std::move(shape), std::move(v)), trainable);
}

Tensor Initializer::constant(const std::string& name, Shape shape, double value, bool trainable) {
  return store_.add(name, Tensor::full(std::move(shape), value), trainable);
}

Tensor Initializer::linear_weight(const std::string& name, std::size_t in, std::size_t out) {
  return uniform(name, {in, out}, 1.0 / std::sqrt(static_cast<double>(in)));
}

Tensor Initializer::linear_bias(const std::string& name, std::size_t in, std::size_t out) {
  return uniform(name, {out}, 1.0 / std::sqrt(static_cast<double>(in)));
}

Tensor Initializer::add(const std::string& name, Tensor value, bool trainable) {
  return store_.add(name, std::move(value), trainable);
}

Tensor sinusoidal_table(std::size_t rows, std::size_t d) {
  std::vector<double> v(rows * d);
  for (std::size_t t = 0; t < rows; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
      v[t * d + i] = i % 2 == 0 ? std::sin(t * freq) : std::cos(t * freq);
    }
  }
  return Tensor::from({rows, d}, std::move(v));
}

}  // namespace lifted
