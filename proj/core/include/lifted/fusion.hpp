#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifted/data_model.hpp"
#include "lifted/init.hpp"
#include "lifted/smoe.hpp"
#include "lifted/tensor.hpp"

namespace lifted {

// Weights modalities by a linear map over the concatenated raw
// representations of the gating set, scaled per modality by gamma.
class ModalityFusion {
 public:
  ModalityFusion(Initializer& init, const std::string& prefix, std::size_t d_model,
                 std::span<const Modality> modalities, std::span<const Modality> gating);

  struct Output {
    Tensor fused;    // [n, d]
    Tensor weights;  // [n, M]
  };

  // refined[k], raw[k]: [n, d] for modalities()[k].
  Output fuse(std::span<const Tensor> refined, std::span<const Tensor> raw) const;
  // [n, M] pre-softmax products C(.)_k * gamma_k.
  Tensor scores(std::span<const Tensor> raw) const;

  const std::vector<Modality>& modalities() const noexcept { return modalities_; }
  const std::vector<Modality>& gating() const noexcept { return gating_; }
  std::size_t concat_width() const noexcept { return gating_.size() * d_model_; }
  const Tensor& c_weight() const noexcept { return c_weight_; }
  const Tensor& c_bias() const noexcept { return c_bias_; }
  const Tensor& gamma() const noexcept { return gamma_; }

 private:
  std::size_t d_model_;
  std::vector<Modality> modalities_;
  std::vector<Modality> gating_;
  std::vector<std::size_t> gating_index_;
  Tensor c_weight_, c_bias_, gamma_;
};

std::size_t fusion_parameter_count(std::size_t d_model, std::size_t modalities,
                                   std::size_t gating);

// Linear d -> 2 head.
class Classifier {
 public:
  Classifier(Initializer& init, const std::string& prefix, std::size_t d_model);

  Tensor logits(const Tensor& u) const;  // [n, 2]
  const Tensor& weight() const noexcept { return weight_; }
  const Tensor& bias() const noexcept { return bias_; }

 private:
  Tensor weight_, bias_;
};

// P(y = 1) per row of [n, 2] logits.
std::vector<double> success_probability(const Tensor& logits);
std::vector<double> classify(const Tensor& u, const Classifier& clf);

struct FusionReport {
  std::string trial_id;
  std::vector<Modality> modalities;
  std::vector<double> weights;
  std::vector<GatingDecision> gates;
  double probability = 0.0;
  int label = -1;

  nlohmann::json to_json() const;
};

}  // namespace lifted
