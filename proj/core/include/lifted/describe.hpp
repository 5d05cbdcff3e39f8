#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lifted/data_model.hpp"
#include "lifted/llm_client.hpp"

namespace lifted {

// On-disk description cache keyed by (trial id, modality, prompt hash).
// One JSON file per entry, written to a temporary name and renamed into
// place so concurrent writers never expose partial files.
class DescriptionCache {
 public:
  explicit DescriptionCache(std::filesystem::path dir);

  // Unreadable or mismatching entries log a warning and count as a miss.
  std::optional<std::string> lookup(const std::string& trial_id, Modality kind,
                                    const std::string& prompt_hash);
  void store(const std::string& trial_id, Modality kind, const std::string& prompt_hash,
             const std::string& text);

  std::filesystem::path entry_path(const std::string& trial_id, Modality kind,
                                   const std::string& prompt_hash) const;
  std::size_t corrupt_entries() const noexcept { return corrupt_.load(); }

 private:
  std::filesystem::path dir_;
  std::atomic<std::size_t> corrupt_{0};
  std::atomic<std::size_t> tmp_counter_{0};
};

struct DescribeStats {
  std::size_t client_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t cache_warnings = 0;
};

struct DescribeOptions {
  std::optional<std::filesystem::path> cache_dir;
  std::string schema_definition = std::string(default_schema_definition());
  // Upper bound on trials described concurrently.
  std::size_t max_concurrency = 4;
};

// SMILES strings joined by '.', the multi-component separator.
std::string smiles_text(const TrialRecord& record);

// K + 1 texts ordered by modality index. k = 0 summarizes the phase-prefixed
// linearization of all modalities; SMILES bypasses the LLM (passthrough)
// because it is consumed by the chemical tokenizer.
std::vector<ModalityText> describe(LlmClient& client, const TrialRecord& record,
                                   DescriptionCache* cache = nullptr,
                                   DescribeStats* stats = nullptr,
                                   std::string_view schema_definition = default_schema_definition());

std::vector<std::vector<ModalityText>> describe_all(LlmClient& client,
                                                    std::span<const TrialRecord> records,
                                                    const DescribeOptions& options = {},
                                                    DescribeStats* stats = nullptr);

// Linearizations for k = 1..K, used when the LLM step is ablated.
std::vector<ModalityText> linearized_texts(const TrialRecord& record);

}  // namespace lifted
