#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifted/data_model.hpp"
#include "lifted/init.hpp"
#include "lifted/random.hpp"
#include "lifted/tensor.hpp"

namespace lifted {

struct SmoeConfig {
  std::size_t num_experts = 16;
  std::size_t top_k = 3;
  // 0 means 2 * d_model.
  std::size_t d_expert = 0;
  // Importance coefficient-of-variation penalty; 0 leaves it out.
  double balance_weight = 0.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SmoeConfig& c);
void from_json(const nlohmann::json& j, SmoeConfig& c);

struct GatingDecision {
  // Ascending expert ids, exactly k of them.
  std::vector<std::size_t> experts;
  // Weight of experts[i]; nonnegative, summing to 1.
  std::vector<double> weights;
  // u . W_g before noise, all R entries.
  std::vector<double> logits;
};

struct GateOutput {
  // [1, R], zero off the selection; differentiable.
  Tensor weights;
  GatingDecision decision;
};

class SparseMoE {
 public:
  SparseMoE(Initializer& init, const std::string& prefix, std::size_t d_model,
            const SmoeConfig& cfg);

  // u: [1, d]. With noise_on, rng must be given; `noise` overrides the draw
  // of standard normals when non-empty (R values).
  GateOutput gate(const Tensor& u, bool noise_on, Rng* rng = nullptr,
                  std::span<const double> noise = {}) const;
  // Weighted sum over the selected experts only.
  Tensor refine(const Tensor& u, const GateOutput& gate) const;
  Tensor expert(std::size_t r, const Tensor& u) const;

  const Tensor& w_gate() const noexcept { return w_gate_; }
  const Tensor& w_noise() const noexcept { return w_noise_; }
  std::size_t num_experts() const noexcept { return cfg_.num_experts; }
  std::size_t top_k() const noexcept { return cfg_.top_k; }
  const std::string& prefix() const noexcept { return prefix_; }

  // Expert parameters in registration order: w1, b1, w2, b2.
  std::vector<Tensor> expert_parameters(std::size_t r) const;

 private:
  struct Expert {
    Tensor w1, b1, w2, b2;
  };
  std::string prefix_;
  SmoeConfig cfg_;
  Tensor w_gate_;
  Tensor w_noise_;
  std::vector<Expert> experts_;
};

std::size_t smoe_parameter_count(std::size_t d_model, const SmoeConfig& cfg);

// Squared coefficient of variation of summed gate weights over a batch.
Tensor importance_penalty(std::span<const Tensor> gate_weights);

struct RoutedDecision {
  Modality modality;
  GatingDecision decision;
};

// Expert-load matrix: per modality, selection counts and mean weight when
// selected.
struct RoutingStats {
  std::size_t num_experts = 0;
  std::vector<Modality> modalities;
  // counts[m][r], weight_sums[m][r]
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::vector<double>> weight_sums;

  double mean_weight(std::size_t m, std::size_t r) const;
  // {modality: {expert_id: {count, mean_weight}}}
  nlohmann::json to_json() const;
};

RoutingStats routing_stats(std::span<const RoutedDecision> decisions,
                           std::span<const Modality> modalities, std::size_t num_experts);

}  // namespace lifted
