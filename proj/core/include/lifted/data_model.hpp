#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace lifted {

// Index k of a trial modality. Summarization is always k = 0.
enum class Modality : std::uint8_t {
  kSummarization = 0,
  kDiseases = 1,
  kDrugs = 2,
  kDescription = 3,
  kSmiles = 4,
  kCriteria = 5,
};

// Raw modalities per trial (K); K + 1 with the generated summarization.
inline constexpr std::size_t kNumRawModalities = 5;
inline constexpr std::size_t kNumModalities = kNumRawModalities + 1;

inline constexpr std::array<Modality, kNumRawModalities> kRawModalities = {
    Modality::kDiseases, Modality::kDrugs, Modality::kDescription, Modality::kSmiles,
    Modality::kCriteria};
inline constexpr std::array<Modality, kNumModalities> kAllModalities = {
    Modality::kSummarization, Modality::kDiseases, Modality::kDrugs,
    Modality::kDescription,   Modality::kSmiles,   Modality::kCriteria};

constexpr std::size_t index_of(Modality m) noexcept { return static_cast<std::size_t>(m); }
std::string_view modality_name(Modality m);
// Throws ContractError on unknown names.
Modality parse_modality(std::string_view name);
// Diseases, drugs and SMILES hold lists; description and criteria hold text.
bool is_list_modality(Modality m);

enum class Phase : std::uint8_t { kI = 1, kII = 2, kIII = 3 };
std::string phase_label(Phase p);  // "phase 1", ...
Phase parse_phase(const nlohmann::json& value);

using RawValue = std::variant<std::string, std::vector<std::string>>;

struct TrialRecord {
  std::string id;
  Phase phase = Phase::kI;
  std::map<Modality, RawValue> modalities;
  int label = 0;

  const RawValue& raw(Modality m) const;
  // Throws DataError unless every raw modality is present with the right
  // value kind and the label is binary.
  void validate() const;
};

// Builds a record with every raw modality present and empty.
TrialRecord empty_record(std::string id, Phase phase, int label);

enum class Provenance : std::uint8_t { kLlmGenerated, kPassthrough, kSynthetic };
std::string_view provenance_name(Provenance p);

struct ModalityText {
  std::string trial_id;
  Modality kind = Modality::kSummarization;
  std::string text;
  Provenance provenance = Provenance::kSynthetic;
};

// One dataset row: {id, phase, diseases[], drugs[], description, smiles[],
// criteria, label}.
nlohmann::json record_to_json(const TrialRecord& record);
TrialRecord record_from_json(const nlohmann::json& row);

std::vector<TrialRecord> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<TrialRecord>& records);

}  // namespace lifted
