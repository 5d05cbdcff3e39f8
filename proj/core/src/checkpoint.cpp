#include "lifted/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>

#include "lifted/errors.hpp"
#include "lifted/hash.hpp"

namespace lifted {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'L', 'I', 'F', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw LoadError("checkpoint payload truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string config_hash(const nlohmann::json& config) { return content_hash(config.dump()); }

void save_checkpoint(const fs::path& dir, const ParameterStore& params,
                     const nlohmann::json& config) {
  fs::create_directories(dir);
  std::string payload(kMagic, sizeof kMagic);
  put_u32(payload, kVersion);
  put_u32(payload, static_cast<std::uint32_t>(params.size()));
  auto entries = nlohmann::json::array();
  for (const auto& p : params.all()) {
    put_u32(payload, static_cast<std::uint32_t>(p.name.size()));
    payload += p.name;
    payload.push_back(p.trainable ? 1 : 0);
    const auto& shape = p.tensor.shape();
    put_u32(payload, static_cast<std::uint32_t>(shape.size()));
    for (auto e : shape) put_u64(payload, e);
    for (double v : p.tensor.data()) put_u64(payload, std::bit_cast<std::uint64_t>(v));
    entries.push_back({{"name", p.name}, {"shape", shape}, {"trainable", p.trainable}});
  }
  nlohmann::json manifest = {
      {"format", "lifted-checkpoint"},
      {"version", kVersion},
      {"config_hash", config_hash(config)},
      {"config", config},
      {"payload", kCheckpointPayload},
      {"payload_hash", content_hash(payload)},
      {"parameters", entries},
  };
  write_file_atomic(dir / kCheckpointPayload, payload);
  write_file_atomic(dir / kCheckpointManifest, manifest.dump(2) + "\n");
}

nlohmann::json read_manifest(const fs::path& dir) {
  const auto text = read_file(dir / kCheckpointManifest);
  try {
    auto manifest = nlohmann::json::parse(text);
    if (manifest.value("format", "") != "lifted-checkpoint") {
      throw LoadError("not a lifted checkpoint manifest: " + dir.string());
    }
    return manifest;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed manifest in " + dir.string() + ": " + e.what());
  }
}

void load_checkpoint(const fs::path& dir, ParameterStore& params, const nlohmann::json& config) {
  const auto manifest = read_manifest(dir);
  const auto expected = config_hash(config);
  if (manifest.value("config_hash", "") != expected) {
    throw LoadError("checkpoint config hash " + manifest.value("config_hash", "") +
                    " does not match model config hash " + expected);
  }
  const auto payload = read_file(dir / kCheckpointPayload);
  if (manifest.value("payload_hash", "") != content_hash(payload)) {
    throw LoadError("checkpoint payload hash mismatch in " + dir.string());
  }
  Reader in(payload);
  if (in.str(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw LoadError("bad checkpoint magic");
  }
  if (in.uint(4) != kVersion) throw LoadError("unsupported checkpoint version");
  const auto count = in.uint(4);

  std::map<std::string, std::pair<Shape, std::vector<double>>> stored;
  for (std::uint64_t n = 0; n < count; ++n) {
    auto name = in.str(in.uint(4));
    in.uint(1);
    Shape shape(in.uint(4));
    for (auto& e : shape) e = in.uint(8);
    std::vector<double> values(shape_numel(shape));
    for (auto& v : values) v = std::bit_cast<double>(in.uint(8));
    stored.emplace(std::move(name), std::make_pair(std::move(shape), std::move(values)));
  }
  if (!in.done()) throw LoadError("trailing bytes in checkpoint payload");
  if (stored.size() != params.size()) {
    throw LoadError("checkpoint holds " + std::to_string(stored.size()) +
                    " parameters, model has " + std::to_string(params.size()));
  }
  for (auto& p : params.all()) {
    auto it = stored.find(p.name);
    if (it == stored.end()) throw LoadError("checkpoint lacks parameter '" + p.name + "'");
    if (it->second.first != p.tensor.shape()) {
      throw LoadError("parameter '" + p.name + "' has shape " +
                      shape_to_string(it->second.first) + " in checkpoint, " +
                      shape_to_string(p.tensor.shape()) + " in model");
    }
    auto dst = p.tensor.mutable_data();
    std::copy(it->second.second.begin(), it->second.second.end(), dst.begin());
  }
}

}  // namespace lifted
