#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lifted {

// 64-bit FNV-1a; used for cache keys, cassette keys and config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
inline std::string content_hash(std::string_view bytes) { return hex64(fnv1a64(bytes)); }

}  // namespace lifted
