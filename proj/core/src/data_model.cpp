#include "lifted/data_model.hpp"

#include <fstream>

#include "lifted/errors.hpp"

namespace lifted {

namespace {
constexpr std::array<std::string_view, kNumModalities> kNames = {
    "summarization", "diseases", "drugs", "description", "smiles", "criteria"};
}

std::string_view modality_name(Modality m) { return kNames.at(index_of(m)); }

Modality parse_modality(std::string_view name) {
  for (std::size_t k = 0; k < kNames.size(); ++k) {
    if (kNames[k] == name) return static_cast<Modality>(k);
  }
  throw ContractError("unknown modality '" + std::string(name) + "'");
}

bool is_list_modality(Modality m) {
  return m == Modality::kDiseases || m == Modality::kDrugs || m == Modality::kSmiles;
}

std::string phase_label(Phase p) { return "phase " + std::to_string(static_cast<int>(p)); }

Phase parse_phase(const nlohmann::json& value) {
  if (value.is_number_integer()) {
    const int v = value.get<int>();
    if (v >= 1 && v <= 3) return static_cast<Phase>(v);
  } else if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == "I" || s == "1" || s == "phase 1") return Phase::kI;
    if (s == "II" || s == "2" || s == "phase 2") return Phase::kII;
    if (s == "III" || s == "3" || s == "phase 3") return Phase::kIII;
  }
  throw DataError("invalid phase " + value.dump());
}

const RawValue& TrialRecord::raw(Modality m) const {
  auto it = modalities.find(m);
  if (it == modalities.end()) {
    throw DataError("trial " + id + " lacks modality " + std::string(modality_name(m)));
  }
  return it->second;
}

void TrialRecord::validate() const {
  if (id.empty()) throw DataError("trial record without id");
  if (label != 0 && label != 1) {
    throw DataError("trial " + id + " has non-binary label " + std::to_string(label));
  }
  for (auto m : kRawModalities) {
    const auto& v = raw(m);
    if (is_list_modality(m) != std::holds_alternative<std::vector<std::string>>(v)) {
      throw DataError("trial " + id + ": modality " + std::string(modality_name(m)) +
                      " has the wrong value kind");
    }
  }
  if (modalities.contains(Modality::kSummarization)) {
    throw DataError("trial " + id + ": summarization is generated, not a raw field");
  }
}

TrialRecord empty_record(std::string id, Phase phase, int label) {
  TrialRecord r{std::move(id), phase, {}, label};
  for (auto m : kRawModalities) {
    if (is_list_modality(m)) {
      r.modalities[m] = std::vector<std::string>{};
    } else {
      r.modalities[m] = std::string{};
    }
  }
  return r;
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kLlmGenerated:
      return "llm_generated";
    case Provenance::kPassthrough:
      return "passthrough";
    case Provenance::kSynthetic:
      return "synthetic";
  }
  return "unknown";
}

nlohmann::json record_to_json(const TrialRecord& record) {
  nlohmann::json row;
  row["id"] = record.id;
  row["phase"] = std::string(static_cast<std::size_t>(record.phase), 'I');
  for (auto m : kRawModalities) {
    std::visit([&](const auto& v) { row[std::string(modality_name(m))] = v; }, record.raw(m));
  }
  row["label"] = record.label;
  return row;
}

TrialRecord record_from_json(const nlohmann::json& row) {
  if (!row.is_object()) throw DataError("dataset row is not an object");
  TrialRecord r;
  try {
    r.id = row.at("id").is_string() ? row.at("id").get<std::string>() : row.at("id").dump();
    r.phase = parse_phase(row.at("phase"));
    r.label = row.at("label").get<int>();
    for (auto m : kRawModalities) {
      const auto key = std::string(modality_name(m));
      if (is_list_modality(m)) {
        r.modalities[m] = row.contains(key) ? row.at(key).get<std::vector<std::string>>()
                                            : std::vector<std::string>{};
      } else {
        r.modalities[m] = row.contains(key) ? row.at(key).get<std::string>() : std::string{};
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed dataset row: ") + e.what());
  }
  r.validate();
  return r;
}

std::vector<TrialRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::vector<TrialRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write dataset " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

}  // namespace lifted
