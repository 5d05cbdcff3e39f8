#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifted/augmentation.hpp"
#include "lifted/data_model.hpp"
#include "lifted/encoder.hpp"
#include "lifted/fusion.hpp"
#include "lifted/parameter.hpp"
#include "lifted/smoe.hpp"
#include "lifted/tokenizer.hpp"

namespace lifted {

struct ModelConfig {
  EncoderConfig encoder;
  SmoeConfig smoe;
  // Text modalities use encoder.max_len.
  std::size_t smiles_max_len = 64;
  std::size_t text_vocab_size = 0;
  // Fused modalities in index order; the first K + 1 or, without
  // summaries, the K raw ones.
  std::vector<Modality> modalities{kAllModalities.begin(), kAllModalities.end()};
  std::vector<Modality> gating{Modality::kDiseases};
  // One unimodal head per modality instead of reusing the fused head.
  bool separate_heads = false;

  void validate() const;
};

struct PreparedTrial {
  std::string id;
  int label = 0;
  // Aligned with ModelConfig::modalities.
  std::vector<TokenSequence> tokens;
};

// Tokenizes the texts of one trial for the model's modalities.
PreparedTrial prepare_trial(const std::string& id, int label, std::span<const ModalityText> texts,
                            const ModelConfig& cfg, const Vocabulary& vocab);

struct ForwardOptions {
  bool training = false;
  bool augment = false;
  AugmentConfig augmentation;
  bool aux = false;
  double eta1 = 0.0;
  double eta2 = 0.0;
  // Reuse the original pass's gate noise for the perturbed pass.
  bool shared_gate_noise = false;
  Rng* gate_rng = nullptr;
  Rng* augment_rng = nullptr;
  Rng* dropout_rng = nullptr;
  bool collect_reports = false;
};

struct BatchOutput {
  Tensor total;
  Tensor loss_c;
  Tensor loss_con;  // undefined when augmentation is off
  Tensor loss_aux;  // undefined when the auxiliary heads are off
  Tensor balance;   // undefined unless a balance weight is set
  std::vector<double> probabilities;
  std::vector<FusionReport> reports;
  std::vector<RoutedDecision> routes;
  std::size_t perturbed_passes = 0;
  std::size_t perturbed_elements = 0;
  std::size_t aux_evaluations = 0;

  double value(const Tensor& t) const { return t.defined() ? t.item() : 0.0; }
};

class LiftedModel {
 public:
  LiftedModel(const ModelConfig& cfg, std::uint64_t seed);
  LiftedModel(const LiftedModel&) = delete;
  LiftedModel& operator=(const LiftedModel&) = delete;

  BatchOutput forward(std::span<const PreparedTrial> batch, const ForwardOptions& opts) const;

  const ModelConfig& config() const noexcept { return cfg_; }
  ParameterStore& parameters() noexcept { return store_; }
  const ParameterStore& parameters() const noexcept { return store_; }
  const ModalityEncoder& encoder(std::size_t k) const { return encoders_.at(k); }
  const SparseMoE& smoe() const noexcept { return *smoe_; }
  const ModalityFusion& fusion() const noexcept { return *fusion_; }
  const Classifier& head() const noexcept { return *head_; }
  // Head applied to modality k's raw representation.
  const Classifier& aux_head(std::size_t k) const;

 private:
  ModelConfig cfg_;
  ParameterStore store_;
  Tensor positions_;
  std::vector<ModalityEncoder> encoders_;
  std::unique_ptr<SparseMoE> smoe_;
  std::unique_ptr<ModalityFusion> fusion_;
  std::unique_ptr<Classifier> head_;
  std::vector<Classifier> aux_heads_;
};

// Analytic parameter counts keyed by module prefix: positions,
// encoder.<modality>, smoe, fusion, head, aux_head.
std::vector<std::pair<std::string, std::size_t>> expected_parameter_counts(const ModelConfig& cfg);

}  // namespace lifted
