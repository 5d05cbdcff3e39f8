#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "lifted/parameter.hpp"

namespace lifted {

// A checkpoint directory holds:
//   params.bin     magic "LIFTCKPT", u32 version, u32 count, then per parameter
//                  u32 name length, name bytes, u8 trainable, u32 rank,
//                  u64 extents[rank], f64 payload[numel]; all little-endian.
//   manifest.json  {format, version, config_hash, config, payload_hash,
//                   parameters: [{name, shape, trainable}]}
inline constexpr const char* kCheckpointPayload = "params.bin";
inline constexpr const char* kCheckpointManifest = "manifest.json";

std::string config_hash(const nlohmann::json& config);

void save_checkpoint(const std::filesystem::path& dir, const ParameterStore& params,
                     const nlohmann::json& config);

// Reads only the manifest.
nlohmann::json read_manifest(const std::filesystem::path& dir);

// Copies stored values into `params`. Every parameter must be present with a
// matching shape and the manifest hash must equal config_hash(config).
void load_checkpoint(const std::filesystem::path& dir, ParameterStore& params,
                     const nlohmann::json& config);

}  // namespace lifted
