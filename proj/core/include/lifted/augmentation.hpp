#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifted/random.hpp"
#include "lifted/tensor.hpp"

namespace lifted {

struct AugmentConfig {
  double p = 0.3;
  double lambda = 0.1;
  bool enabled = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const AugmentConfig& c);
void from_json(const nlohmann::json& j, AugmentConfig& c);

// Per-element factors: exp(alpha), alpha ~ U(-lambda, lambda), with
// probability p; 1 otherwise. `selected` receives the selection count.
std::vector<double> perturbation_factors(std::size_t n, const AugmentConfig& cfg, Rng& rng,
                                         std::size_t* selected = nullptr);

// u scaled elementwise by perturbation_factors; differentiable in u.
Tensor perturb(const Tensor& u, const AugmentConfig& cfg, Rng& rng,
               std::size_t* selected = nullptr);

// originals[k], perturbed[k]: [N, d] rows for modality k. Mean over N and
// modalities of squared Euclidean distances.
Tensor consistency_loss(std::span<const Tensor> originals, std::span<const Tensor> perturbed);

}  // namespace lifted
