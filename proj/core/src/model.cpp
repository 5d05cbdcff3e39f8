#include "lifted/model.hpp"

#include <algorithm>
#include <random>

#include "lifted/errors.hpp"
#include "lifted/ops.hpp"
#include "lifted/smiles.hpp"

namespace lifted {

namespace {

std::size_t vocab_size_for(const ModelConfig& cfg, Modality m) {
  return m == Modality::kSmiles ? SmilesVocabulary::instance().size() : cfg.text_vocab_size;
}

std::size_t position_rows(const ModelConfig& cfg) {
  return std::max(cfg.encoder.max_len, cfg.smiles_max_len);
}

std::vector<double> draw_noise(std::size_t r, Rng* rng) {
  if (!rng) throw ContractError("forward: training needs a gate-noise RNG");
  std::normal_distribution<double> normal;
  std::vector<double> mu(r);
  for (auto& x : mu) x = normal(*rng);
  return mu;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  return rows.size() == 1 ? rows[0] : concat(rows, 0);
}

}  // namespace

void ModelConfig::validate() const {
  encoder.validate();
  smoe.validate();
  if (text_vocab_size < static_cast<std::size_t>(kFirstRegularId)) {
    throw ContractError("model: text vocabulary too small");
  }
  if (modalities.empty()) throw ContractError("model: no modalities");
  for (std::size_t i = 1; i < modalities.size(); ++i) {
    if (index_of(modalities[i - 1]) >= index_of(modalities[i])) {
      throw ContractError("model: modalities must be distinct and in index order");
    }
  }
  if (smiles_max_len < 2) throw ContractError("model: max_len must be >= 2");
}

PreparedTrial prepare_trial(const std::string& id, int label, std::span<const ModalityText> texts,
                            const ModelConfig& cfg, const Vocabulary& vocab) {
  PreparedTrial t{id, label, {}};
  for (auto m : cfg.modalities) {
    auto it = std::find_if(texts.begin(), texts.end(),
                           [m](const ModalityText& x) { return x.kind == m; });
    if (it == texts.end()) {
      throw DataError("trial " + id + " has no text for modality " + std::string(modality_name(m)));
    }
    t.tokens.push_back(m == Modality::kSmiles ? tokenize_smiles(it->text, cfg.smiles_max_len)
                                              : tokenize_text(it->text, vocab, cfg.encoder.max_len));
  }
  return t;
}

LiftedModel::LiftedModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Initializer init(store_, seed);
  EncoderConfig enc = cfg_.encoder;
  enc.max_len = position_rows(cfg_);
  positions_ = make_position_table(init, enc);
  for (auto m : cfg_.modalities) {
    encoders_.emplace_back(init, "encoder." + std::string(modality_name(m)), enc,
                           vocab_size_for(cfg_, m), cls_id(m), positions_);
  }
  smoe_ = std::make_unique<SparseMoE>(init, "smoe", enc.d_model, cfg_.smoe);
  fusion_ = std::make_unique<ModalityFusion>(init, "fusion", enc.d_model, cfg_.modalities,
                                             cfg_.gating);
  head_ = std::make_unique<Classifier>(init, "head", enc.d_model);
  if (cfg_.separate_heads) {
    for (auto m : cfg_.modalities) {
      aux_heads_.emplace_back(init, "aux_head." + std::string(modality_name(m)), enc.d_model);
    }
  }
}

const Classifier& LiftedModel::aux_head(std::size_t k) const {
  return cfg_.separate_heads ? aux_heads_.at(k) : *head_;
}

BatchOutput LiftedModel::forward(std::span<const PreparedTrial> batch,
                                 const ForwardOptions& opts) const {
  if (batch.empty()) throw ContractError("forward: empty batch");
  const std::size_t M = cfg_.modalities.size();
  const std::size_t R = cfg_.smoe.num_experts;
  const bool augment = opts.training && opts.augment && opts.augmentation.enabled;
  const bool aux = opts.aux && opts.eta2 > 0.0;
  if (augment && !opts.augment_rng) throw ContractError("forward: augmentation needs an RNG");

  EncodeContext ctx;
  ctx.training = opts.training;
  ctx.dropout_rng = opts.dropout_rng;

  BatchOutput out;
  std::vector<Tensor> fused_logits;
  std::vector<std::vector<Tensor>> refined_rows(M), perturbed_rows(M), aux_logits(M);
  std::vector<Tensor> gate_weights;
  std::vector<int> labels;

  for (const auto& trial : batch) {
    if (trial.tokens.size() != M) {
      throw ContractError("forward: trial " + trial.id + " has " +
                          std::to_string(trial.tokens.size()) + " modalities, model expects " +
                          std::to_string(M));
    }
    labels.push_back(trial.label);
    std::vector<Tensor> raw(M), refined(M);
    std::vector<GatingDecision> decisions;
    for (std::size_t k = 0; k < M; ++k) {
      const auto& enc = encoders_[k];
      const auto& seq = trial.tokens[k];
      const Tensor embs = enc.embed(seq);
      // The perturbed pass replays the original pass's dropout masks so the
      // two refined representations differ only by the augmentation.
      Rng replay_dropout;
      if (augment && ctx.dropout_rng) replay_dropout = *ctx.dropout_rng;
      raw[k] = enc.encode(embs, seq.mask, ctx);

      std::vector<double> mu;
      if (opts.training) mu = draw_noise(R, opts.gate_rng);
      const GateOutput g = smoe_->gate(raw[k], opts.training, nullptr, mu);
      refined[k] = smoe_->refine(raw[k], g);
      refined_rows[k].push_back(refined[k]);
      gate_weights.push_back(g.weights);
      out.routes.push_back({cfg_.modalities[k], g.decision});
      if (opts.collect_reports) decisions.push_back(g.decision);

      if (augment) {
        // [cls] is not perturbed: only the token embeddings are.
        const Tensor v_embs = perturb(embs, opts.augmentation, *opts.augment_rng,
                                      &out.perturbed_elements);
        EncodeContext vctx = ctx;
        if (ctx.dropout_rng) vctx.dropout_rng = &replay_dropout;
        const Tensor v = enc.encode(v_embs, seq.mask, vctx);
        if (!opts.shared_gate_noise) mu = draw_noise(R, opts.gate_rng);
        const GateOutput gv = smoe_->gate(v, true, nullptr, mu);
        perturbed_rows[k].push_back(smoe_->refine(v, gv));
        ++out.perturbed_passes;
      }
      if (aux) {
        aux_logits[k].push_back(aux_head(k).logits(raw[k]));
        ++out.aux_evaluations;
      }
    }
    const auto fused = fusion_->fuse(refined, raw);
    const Tensor logits = head_->logits(fused.fused);
    fused_logits.push_back(logits);
    const double p = success_probability(logits)[0];
    out.probabilities.push_back(p);
    if (opts.collect_reports) {
      FusionReport rep;
      rep.trial_id = trial.id;
      rep.modalities = cfg_.modalities;
      rep.weights.assign(fused.weights.data().begin(), fused.weights.data().end());
      rep.gates = std::move(decisions);
      rep.probability = p;
      rep.label = trial.label;
      out.reports.push_back(std::move(rep));
    }
  }

  out.loss_c = cross_entropy(stack_rows(fused_logits), labels);
  out.total = out.loss_c;
  if (augment) {
    std::vector<Tensor> u, v;
    for (std::size_t k = 0; k < M; ++k) {
      u.push_back(stack_rows(refined_rows[k]));
      v.push_back(stack_rows(perturbed_rows[k]));
    }
    out.loss_con = consistency_loss(u, v);
    if (opts.eta1 > 0.0) out.total = add(out.total, scale(out.loss_con, opts.eta1));
  }
  if (aux) {
    Tensor acc;
    for (std::size_t k = 0; k < M; ++k) {
      const Tensor ce = cross_entropy(stack_rows(aux_logits[k]), labels);
      acc = acc.defined() ? add(acc, ce) : ce;
    }
    out.loss_aux = scale(acc, 1.0 / static_cast<double>(M));
    out.total = add(out.total, scale(out.loss_aux, opts.eta2));
  }
  if (opts.training && cfg_.smoe.balance_weight > 0.0) {
    out.balance = importance_penalty(gate_weights);
    out.total = add(out.total, scale(out.balance, cfg_.smoe.balance_weight));
  }
  return out;
}

std::vector<std::pair<std::string, std::size_t>> expected_parameter_counts(const ModelConfig& cfg) {
  const std::size_t d = cfg.encoder.d_model;
  std::vector<std::pair<std::string, std::size_t>> out;
  out.emplace_back("positions", position_rows(cfg) * d);
  for (auto m : cfg.modalities) {
    out.emplace_back("encoder." + std::string(modality_name(m)),
                     encoder_parameter_count(cfg.encoder, vocab_size_for(cfg, m)));
  }
  out.emplace_back("smoe", smoe_parameter_count(d, cfg.smoe));
  out.emplace_back("fusion", fusion_parameter_count(d, cfg.modalities.size(), cfg.gating.size()));
  out.emplace_back("head", 2 * d + 2);
  out.emplace_back("aux_head", cfg.separate_heads ? cfg.modalities.size() * (2 * d + 2) : 0);
  return out;
}

}  // namespace lifted
