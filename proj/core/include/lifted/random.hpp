#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lifted {

using Rng = std::mt19937_64;

// Independent RNG streams derived from one master seed.
enum class Stream : std::uint64_t {
  kInit = 1,
  kBatching = 2,
  kGateNoise = 3,
  kAugmentation = 4,
  kDropout = 5,
  kData = 6,
  kSplit = 7,
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, Stream stream);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
Rng make_rng(std::uint64_t master, Stream stream);

}  // namespace lifted
