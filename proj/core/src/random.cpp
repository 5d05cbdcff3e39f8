#include "lifted/random.hpp"

#include "lifted/hash.hpp"

namespace lifted {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Stream stream) {
  return splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(stream));
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  return splitmix64(splitmix64(master) ^ fnv1a64(label));
}

Rng make_rng(std::uint64_t master, Stream stream) { return Rng(derive_seed(master, stream)); }

}  // namespace lifted
