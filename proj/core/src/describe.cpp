#include "lifted/describe.hpp"

#include <fstream>
#include <iterator>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "lifted/errors.hpp"
#include "lifted/hash.hpp"
#include "lifted/logging.hpp"
#include "lifted/prompt.hpp"

namespace lifted {

namespace fs = std::filesystem;

DescriptionCache::DescriptionCache(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
}

fs::path DescriptionCache::entry_path(const std::string& trial_id, Modality kind,
                                      const std::string& prompt_hash) const {
  std::string key = trial_id;
  key += '\x1f';
  key += modality_name(kind);
  key += '\x1f';
  key += prompt_hash;
  return dir_ / (content_hash(key) + ".json");
}

std::optional<std::string> DescriptionCache::lookup(const std::string& trial_id, Modality kind,
                                                    const std::string& prompt_hash) {
  const auto path = entry_path(trial_id, kind, prompt_hash);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  const std::string body{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  try {
    const auto entry = nlohmann::json::parse(body);
    if (entry.at("trial_id") == trial_id && entry.at("kind") == modality_name(kind) &&
        entry.at("prompt_hash") == prompt_hash) {
      return entry.at("text").get<std::string>();
    }
  } catch (const nlohmann::json::exception&) {
  }
  ++corrupt_;
  warn("description cache entry " + path.string() + " is corrupt; regenerating");
  return std::nullopt;
}

void DescriptionCache::store(const std::string& trial_id, Modality kind,
                             const std::string& prompt_hash, const std::string& text) {
  const auto path = entry_path(trial_id, kind, prompt_hash);
  const nlohmann::json entry = {{"trial_id", trial_id},
                                {"kind", modality_name(kind)},
                                {"prompt_hash", prompt_hash},
                                {"text", text}};
  const auto tmp = fs::path(path.string() + ".tmp" + std::to_string(tmp_counter_++) + "." +
                            content_hash(std::to_string(
                                std::hash<std::thread::id>{}(std::this_thread::get_id()))));
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot write cache entry " + tmp.string());
    out << entry.dump() << '\n';
  }
  fs::rename(tmp, path);
}

std::string smiles_text(const TrialRecord& record) {
  const auto& list = std::get<std::vector<std::string>>(record.raw(Modality::kSmiles));
  std::string out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (i) out.push_back('.');
    out += list[i];
  }
  return out;
}

std::vector<ModalityText> describe(LlmClient& client, const TrialRecord& record,
                                   DescriptionCache* cache, DescribeStats* stats,
                                   std::string_view schema_definition) {
  DescribeStats local;
  std::vector<ModalityText> out;
  out.reserve(kNumModalities);
  for (auto kind : kAllModalities) {
    if (kind == Modality::kSmiles) {
      out.push_back({record.id, kind, smiles_text(record), Provenance::kPassthrough});
      continue;
    }
    const auto lin = kind == Modality::kSummarization ? linearize_all(record)
                                                      : linearize(record, kind);
    const auto prompt = build_prompt(lin, schema_definition);
    const auto hash = prompt.hash();
    std::optional<std::string> text;
    if (cache) {
      const auto before = cache->corrupt_entries();
      text = cache->lookup(record.id, kind, hash);
      local.cache_warnings += cache->corrupt_entries() - before;
      if (text) ++local.cache_hits;
    }
    if (!text) {
      try {
        ++local.client_calls;
        text = client.complete(prompt);
      } catch (const LlmError& e) {
        throw TransportError(record.id, e.what(), e.retriable());
      }
      if (cache) cache->store(record.id, kind, hash, *text);
    }
    out.push_back({record.id, kind, std::move(*text), Provenance::kLlmGenerated});
  }
  if (stats) {
    stats->client_calls += local.client_calls;
    stats->cache_hits += local.cache_hits;
    stats->cache_warnings += local.cache_warnings;
  }
  return out;
}

std::vector<std::vector<ModalityText>> describe_all(LlmClient& client,
                                                    std::span<const TrialRecord> records,
                                                    const DescribeOptions& options,
                                                    DescribeStats* stats) {
  std::optional<DescriptionCache> cache;
  if (options.cache_dir) cache.emplace(*options.cache_dir);
  std::vector<std::vector<ModalityText>> out(records.size());
  std::vector<DescribeStats> per_trial(records.size());

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      try {
        out[i] = describe(client, records[i], cache ? &*cache : nullptr, &per_trial[i],
                          options.schema_definition);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  const std::size_t fan_out =
      std::max<std::size_t>(1, std::min(options.max_concurrency, records.size()));
  if (fan_out == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < fan_out; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  if (stats) {
    for (const auto& s : per_trial) {
      stats->client_calls += s.client_calls;
      stats->cache_hits += s.cache_hits;
      stats->cache_warnings += s.cache_warnings;
    }
  }
  return out;
}

std::vector<ModalityText> linearized_texts(const TrialRecord& record) {
  std::vector<ModalityText> out;
  for (auto kind : kRawModalities) {
    if (kind == Modality::kSmiles) {
      out.push_back({record.id, kind, smiles_text(record), Provenance::kPassthrough});
    } else {
      out.push_back({record.id, kind, linearize(record, kind), Provenance::kPassthrough});
    }
  }
  return out;
}

}  // namespace lifted
