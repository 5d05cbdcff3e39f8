#include "lifted/smoe.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "lifted/errors.hpp"
#include "lifted/ops.hpp"

namespace lifted {

void SmoeConfig::validate() const {
  if (num_experts == 0 || top_k == 0 || top_k > num_experts) {
    throw ContractError("smoe: need 1 <= top_k <= num_experts, got k=" + std::to_string(top_k) +
                        " R=" + std::to_string(num_experts));
  }
  if (balance_weight < 0.0) throw ContractError("smoe: balance_weight must be nonnegative");
}

void to_json(nlohmann::json& j, const SmoeConfig& c) {
  j = {{"num_experts", c.num_experts},
       {"top_k", c.top_k},
       {"d_expert", c.d_expert},
       {"balance_weight", c.balance_weight}};
}

void from_json(const nlohmann::json& j, SmoeConfig& c) {
  c.num_experts = j.value("num_experts", c.num_experts);
  c.top_k = j.value("top_k", c.top_k);
  c.d_expert = j.value("d_expert", c.d_expert);
  c.balance_weight = j.value("balance_weight", c.balance_weight);
}

SparseMoE::SparseMoE(Initializer& init, const std::string& prefix, std::size_t d_model,
                     const SmoeConfig& cfg)
    : prefix_(prefix), cfg_(cfg) {
  cfg_.validate();
  const std::size_t R = cfg.num_experts;
  const std::size_t h = cfg.d_expert ? cfg.d_expert : 2 * d_model;
  w_gate_ = init.linear_weight(prefix + ".w_gate", d_model, R);
  // Zero noise scale at start: softplus(0) = ln 2 keeps the noise bounded.
  w_noise_ = init.constant(prefix + ".w_noise", {d_model, R}, 0.0);
  for (std::size_t r = 0; r < R; ++r) {
    const std::string p = prefix + ".expert" + std::to_string(r);
    experts_.push_back({init.linear_weight(p + ".w1", d_model, h),
                        init.linear_bias(p + ".b1", d_model, h),
                        init.linear_weight(p + ".w2", h, d_model),
                        init.linear_bias(p + ".b2", h, d_model)});
  }
}

GateOutput SparseMoE::gate(const Tensor& u, bool noise_on, Rng* rng,
                           std::span<const double> noise) const {
  const std::size_t R = cfg_.num_experts;
  Tensor clean = matmul(u, w_gate_);
  Tensor logits = clean;
  if (noise_on) {
    std::vector<double> mu(R);
    if (!noise.empty()) {
      if (noise.size() != R) throw ContractError("gate: noise must have R entries");
      mu.assign(noise.begin(), noise.end());
    } else {
      if (!rng) throw ContractError("gate: noisy gating needs an RNG");
      std::normal_distribution<double> normal;
      for (auto& m : mu) m = normal(*rng);
    }
    logits = add(clean, mul(Tensor::from({1, R}, std::move(mu)), softplus(matmul(u, w_noise_))));
  }
  const Tensor masked = topk_mask(logits, cfg_.top_k);
  GateOutput out{softmax(masked, 1), {}};
  const auto md = masked.data();
  const auto wd = out.weights.data();
  for (std::size_t r = 0; r < R; ++r) {
    if (md[r] != -std::numeric_limits<double>::infinity()) {
      out.decision.experts.push_back(r);
      out.decision.weights.push_back(wd[r]);
    }
  }
  out.decision.logits.assign(clean.data().begin(), clean.data().end());
  if (out.decision.experts.size() != cfg_.top_k) {
    throw ContractError("gate: selected " + std::to_string(out.decision.experts.size()) +
                        " experts, expected " + std::to_string(cfg_.top_k));
  }
  return out;
}

Tensor SparseMoE::expert(std::size_t r, const Tensor& u) const {
  const Expert& e = experts_.at(r);
  return linear(gelu(linear(u, e.w1, e.b1)), e.w2, e.b2);
}

Tensor SparseMoE::refine(const Tensor& u, const GateOutput& g) const {
  Tensor acc;
  for (std::size_t r : g.decision.experts) {
    Tensor term = mul(slice(g.weights, 1, r, 1), expert(r, u));
    acc = acc.defined() ? add(acc, term) : term;
  }
  return acc;
}

std::vector<Tensor> SparseMoE::expert_parameters(std::size_t r) const {
  const Expert& e = experts_.at(r);
  return {e.w1, e.b1, e.w2, e.b2};
}

std::size_t smoe_parameter_count(std::size_t d_model, const SmoeConfig& cfg) {
  const std::size_t h = cfg.d_expert ? cfg.d_expert : 2 * d_model;
  return 2 * d_model * cfg.num_experts +
         cfg.num_experts * (d_model * h + h + h * d_model + d_model);
}

Tensor importance_penalty(std::span<const Tensor> gate_weights) {
  if (gate_weights.empty()) return Tensor::scalar(0.0);
  Tensor importance = gate_weights[0];
  for (std::size_t i = 1; i < gate_weights.size(); ++i) importance = add(importance, gate_weights[i]);
  const Tensor m = mean(importance);
  const Tensor centered = sub(importance, m);
  const Tensor var = mean(mul(centered, centered));
  return div(var, add(mul(m, m), Tensor::scalar(1e-10)));
}

double RoutingStats::mean_weight(std::size_t m, std::size_t r) const {
  return counts[m][r] ? weight_sums[m][r] / static_cast<double>(counts[m][r]) : 0.0;
}

nlohmann::json RoutingStats::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t m = 0; m < modalities.size(); ++m) {
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t r = 0; r < num_experts; ++r) {
      row[std::to_string(r)] = {{"count", counts[m][r]}, {"mean_weight", mean_weight(m, r)}};
    }
    j[std::string(modality_name(modalities[m]))] = std::move(row);
  }
  return j;
}

RoutingStats routing_stats(std::span<const RoutedDecision> decisions,
                           std::span<const Modality> modalities, std::size_t num_experts) {
  RoutingStats s;
  s.num_experts = num_experts;
  s.modalities.assign(modalities.begin(), modalities.end());
  s.counts.assign(modalities.size(), std::vector<std::size_t>(num_experts, 0));
  s.weight_sums.assign(modalities.size(), std::vector<double>(num_experts, 0.0));
  for (const auto& d : decisions) {
    std::size_t m = 0;
    while (m < modalities.size() && modalities[m] != d.modality) ++m;
    if (m == modalities.size()) {
      throw ContractError("routing_stats: decision for unlisted modality " +
                          std::string(modality_name(d.modality)));
    }
    for (std::size_t i = 0; i < d.decision.experts.size(); ++i) {
      const std::size_t r = d.decision.experts[i];
      if (r >= num_experts) throw ContractError("routing_stats: expert id out of range");
      ++s.counts[m][r];
      s.weight_sums[m][r] += d.decision.weights[i];
    }
  }
  return s;
}

}  // namespace lifted
