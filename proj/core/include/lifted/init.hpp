#pragma once

#include <cstdint>
#include <string>

#include "lifted/parameter.hpp"
#include "lifted/tensor.hpp"

namespace lifted {

// Registers parameters whose initial values depend only on the master seed
// and the parameter name, so models that differ in which modules exist
// still agree on every shared parameter.
class Initializer {
 public:
  Initializer(ParameterStore& store, std::uint64_t seed) : store_(store), seed_(seed) {}

  Tensor normal(const std::string& name, Shape shape, double stddev, bool trainable = true);
  Tensor uniform(const std::string& name, Shape shape, double bound, bool trainable = true);
  Tensor constant(const std::string& name, Shape shape, double value, bool trainable = true);
  // Weight [in, out] ~ U(-1/sqrt(in), 1/sqrt(in)).
  Tensor linear_weight(const std::string& name, std::size_t in, std::size_t out);
  Tensor linear_bias(const std::string& name, std::size_t in, std::size_t out);
  Tensor add(const std::string& name, Tensor value, bool trainable = true);

  ParameterStore& store() noexcept { return store_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  ParameterStore& store_;
  std::uint64_t seed_;
};

// Standard fixed sin/cos position table of shape [rows, d].
Tensor sinusoidal_table(std::size_t rows, std::size_t d);

}  // namespace lifted
