#include "lifted/fusion.hpp"

#include <cmath>

#include "lifted/errors.hpp"
#include "lifted/ops.hpp"

namespace lifted {

ModalityFusion::ModalityFusion(Initializer& init, const std::string& prefix, std::size_t d_model,
                               std::span<const Modality> modalities,
                               std::span<const Modality> gating)
    : d_model_(d_model),
      modalities_(modalities.begin(), modalities.end()),
      gating_(gating.begin(), gating.end()) {
  if (modalities_.empty()) throw ContractError("fusion: no modalities");
  if (gating_.empty()) throw ContractError("fusion: the gating set must not be empty");
  for (auto g : gating_) {
    std::size_t k = 0;
    while (k < modalities_.size() && modalities_[k] != g) ++k;
    if (k == modalities_.size()) {
      throw ContractError("fusion: gating modality " + std::string(modality_name(g)) +
                          " is not among the fused modalities");
    }
    gating_index_.push_back(k);
  }
  const std::size_t M = modalities_.size();
  c_weight_ = init.linear_weight(prefix + ".c.weight", concat_width(), M);
  c_bias_ = init.linear_bias(prefix + ".c.bias", concat_width(), M);
  gamma_ = init.constant(prefix + ".gamma", {M}, 1.0);
}

Tensor ModalityFusion::scores(std::span<const Tensor> raw) const {
  if (raw.size() != modalities_.size()) {
    throw ContractError("fusion: expected " + std::to_string(modalities_.size()) +
                        " raw representations, got " + std::to_string(raw.size()));
  }
  std::vector<Tensor> parts;
  for (auto k : gating_index_) parts.push_back(raw[k]);
  const Tensor joined = parts.size() == 1 ? parts[0] : concat(parts, 1);
  if (joined.rank() != 2 || joined.dim(1) != concat_width()) {
    throw ContractError("fusion: gating input has shape " + shape_to_string(joined.shape()));
  }
  return mul(linear(joined, c_weight_, c_bias_), gamma_);
}

ModalityFusion::Output ModalityFusion::fuse(std::span<const Tensor> refined,
                                            std::span<const Tensor> raw) const {
  if (refined.size() != modalities_.size()) {
    throw ContractError("fusion: expected " + std::to_string(modalities_.size()) +
                        " refined representations, got " + std::to_string(refined.size()));
  }
  const Shape shape = refined[0].shape();
  for (std::size_t k = 0; k < refined.size(); ++k) {
    if (refined[k].shape() != shape || raw[k].shape() != shape || shape.size() != 2 ||
        shape[1] != d_model_) {
      throw ContractError("fusion: representation shape mismatch at modality " +
                          std::string(modality_name(modalities_[k])));
    }
  }
  Output out;
  out.weights = softmax(scores(raw), 1);
  for (std::size_t k = 0; k < refined.size(); ++k) {
    const Tensor term = mul(slice(out.weights, 1, k, 1), refined[k]);
    out.fused = out.fused.defined() ? add(out.fused, term) : term;
  }
  return out;
}

std::size_t fusion_parameter_count(std::size_t d_model, std::size_t modalities,
                                   std::size_t gating) {
  return gating * d_model * modalities + modalities + modalities;
}

Classifier::Classifier(Initializer& init, const std::string& prefix, std::size_t d_model)
    : weight_(init.linear_weight(prefix + ".weight", d_model, 2)),
      bias_(init.linear_bias(prefix + ".bias", d_model, 2)) {}

Tensor Classifier::logits(const Tensor& u) const { return linear(u, weight_, bias_); }

std::vector<double> success_probability(const Tensor& logits) {
  if (logits.rank() != 2 || logits.dim(1) != 2) {
    throw ContractError("success_probability: expected [n, 2] logits, got " +
                        shape_to_string(logits.shape()));
  }
  std::vector<double> out(logits.dim(0));
  const auto d = logits.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    // Two-class softmax written as a logistic of the margin.
    const double margin = d[2 * i + 1] - d[2 * i];
    out[i] = margin >= 0 ? 1.0 / (1.0 + std::exp(-margin))
                         : std::exp(margin) / (1.0 + std::exp(margin));
  }
  return out;
}

std::vector<double> classify(const Tensor& u, const Classifier& clf) {
  NoGradGuard guard;
  return success_probability(clf.logits(u));
}

nlohmann::json FusionReport::to_json() const {
  nlohmann::json w = nlohmann::json::object();
  nlohmann::json g = nlohmann::json::object();
  for (std::size_t k = 0; k < modalities.size(); ++k) {
    const std::string name(modality_name(modalities[k]));
    w[name] = weights[k];
    if (k < gates.size()) {
      g[name] = {{"experts", gates[k].experts}, {"weights", gates[k].weights}};
    }
  }
  nlohmann::json j = {{"trial_id", trial_id},
                      {"modality_weights", w},
                      {"gating", g},
                      {"probability", probability}};
  if (label >= 0) j["label"] = label;
  return j;
}

}  // namespace lifted
