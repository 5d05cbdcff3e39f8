#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lifted/data_model.hpp"

namespace lifted {

// Where and how the label is planted. Label 1 is success, 0 failure.
struct SignalSpec {
  std::vector<Modality> modalities{Modality::kDiseases};
  std::string failure_token = "refractory";
  std::string success_token = "localized";
  // Atoms planted instead of words when kSmiles is a signal modality.
  std::string failure_atom = "[Au]";
  std::string success_atom = "[Ag]";
  // Probability that the planted token agrees with the label.
  double fidelity = 1.0;
  double success_rate = 0.5;
};

// Deterministic corpus of `n` trials (n >= 1). Filler text is drawn from
// fixed pools that never contain the planted tokens.
std::vector<TrialRecord> generate_synthetic(std::size_t n, std::uint64_t seed,
                                            const SignalSpec& signal = {});

// Drug molecules used as SMILES filler.
std::span<const std::string_view> synthetic_smiles_pool();

}  // namespace lifted
