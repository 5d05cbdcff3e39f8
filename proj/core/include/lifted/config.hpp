#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifted/augmentation.hpp"
#include "lifted/encoder.hpp"
#include "lifted/model.hpp"
#include "lifted/smoe.hpp"

namespace lifted {

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 1e-2;
  // "cosine" or "constant".
  std::string schedule = "cosine";
  std::uint64_t seed = 0;
  double eta1 = 0.1;
  double eta2 = 0.5;
  AugmentConfig augment;
  bool no_aug = false;
  bool no_aux = false;
  bool no_llm = false;
  bool gating_all = false;
  std::vector<Modality> gating{Modality::kDiseases};
  bool shared_gate_noise = false;
  bool separate_heads = false;
  double valid_fraction = 0.2;
  // Global gradient-norm bound; 0 disables clipping.
  double grad_clip = 0.0;
  std::size_t vocab_size = 5000;
  std::size_t smiles_max_len = 64;
  double threshold = 0.5;
  EncoderConfig encoder;
  SmoeConfig smoe;

  void validate() const;
  nlohmann::json to_json() const;
  // Unknown keys raise ContractError; absent keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig load(const std::filesystem::path& path);

  // Architecture for a given text vocabulary size, with the ablation flags
  // applied: no_llm drops the summarization modality, gating_all widens the
  // gating set to every fused modality.
  ModelConfig model_config(std::size_t text_vocab_size) const;
};

}  // namespace lifted
