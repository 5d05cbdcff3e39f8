#include "lifted/augmentation.hpp"

#include <cmath>
#include <random>

#include "lifted/errors.hpp"
#include "lifted/ops.hpp"

namespace lifted {

void AugmentConfig::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("augmentation p must lie in [0, 1]");
  if (!(lambda >= 0.0)) throw ContractError("augmentation lambda must be nonnegative");
}

void to_json(nlohmann::json& j, const AugmentConfig& c) {
  j = {{"p", c.p}, {"lambda", c.lambda}, {"enabled", c.enabled}};
}

void from_json(const nlohmann::json& j, AugmentConfig& c) {
  c.p = j.value("p", c.p);
  c.lambda = j.value("lambda", c.lambda);
  c.enabled = j.value("enabled", c.enabled);
}

std::vector<double> perturbation_factors(std::size_t n, const AugmentConfig& cfg, Rng& rng,
                                         std::size_t* selected) {
  cfg.validate();
  std::vector<double> f(n, 1.0);
  std::bernoulli_distribution pick(cfg.p);
  std::uniform_real_distribution<double> alpha(-cfg.lambda, cfg.lambda);
  std::size_t count = 0;
  for (auto& x : f) {
    if (pick(rng)) {
      ++count;
      if (cfg.lambda > 0.0) x = std::exp(alpha(rng));
    }
  }
  if (selected) *selected += count;
  return f;
}

Tensor perturb(const Tensor& u, const AugmentConfig& cfg, Rng& rng, std::size_t* selected) {
  auto f = perturbation_factors(u.numel(), cfg, rng, selected);
  return mul(u, Tensor::from(u.shape(), std::move(f)));
}

Tensor consistency_loss(std::span<const Tensor> originals, std::span<const Tensor> perturbed) {
  if (originals.empty() || originals.size() != perturbed.size()) {
    throw ContractError("consistency_loss: need matching non-empty modality lists");
  }
  const Shape shape = originals[0].shape();
  if (shape.size() != 2 || shape[0] == 0) {
    throw ContractError("consistency_loss: expected [N, d] inputs, got " + shape_to_string(shape));
  }
  Tensor total;
  for (std::size_t k = 0; k < originals.size(); ++k) {
    if (originals[k].shape() != shape || perturbed[k].shape() != shape) {
      throw ContractError("consistency_loss: shape mismatch at modality " + std::to_string(k) +
                          ": " + shape_to_string(originals[k].shape()) + " vs " +
                          shape_to_string(perturbed[k].shape()));
    }
    const Tensor diff = sub(originals[k], perturbed[k]);
    const Tensor sq = sum(mul(diff, diff));
    total = total.defined() ? add(total, sq) : sq;
  }
  return scale(total, 1.0 / static_cast<double>(shape[0] * originals.size()));
}

}  // namespace lifted
