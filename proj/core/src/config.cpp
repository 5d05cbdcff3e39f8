#include "lifted/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "lifted/errors.hpp"

namespace lifted {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw ContractError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw ContractError("unknown config key '" + (where.empty() ? "" : where + ".") + it.key() +
                          "'");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0) throw ContractError("epochs must be positive");
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  if (lr < 0.0) throw ContractError("lr must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ContractError("betas must lie in [0, 1)");
  }
  if (eps <= 0.0) throw ContractError("eps must be positive");
  if (weight_decay < 0.0) throw ContractError("weight_decay must be nonnegative");
  if (schedule != "cosine" && schedule != "constant") {
    throw ContractError("schedule must be 'cosine' or 'constant', got '" + schedule + "'");
  }
  if (eta1 < 0.0 || eta2 < 0.0) throw ContractError("eta1 and eta2 must be nonnegative");
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0)) {
    throw ContractError("valid_fraction must lie in [0, 1)");
  }
  if (grad_clip < 0.0) throw ContractError("grad_clip must be nonnegative");
  if (gating.empty()) throw ContractError("gating must name at least one modality");
  if (no_llm && std::find(gating.begin(), gating.end(), Modality::kSummarization) != gating.end() &&
      !gating_all) {
    throw ContractError("gating on the summarization modality is impossible with no_llm");
  }
  augment.validate();
  encoder.validate();
  smoe.validate();
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json gating_names = nlohmann::json::array();
  for (auto m : gating) gating_names.push_back(modality_name(m));
  return {
      {"epochs", epochs},
      {"batch_size", batch_size},
      {"lr", lr},
      {"betas", {beta1, beta2}},
      {"eps", eps},
      {"weight_decay", weight_decay},
      {"schedule", schedule},
      {"seed", seed},
      {"eta1", eta1},
      {"eta2", eta2},
      {"augment", augment},
      {"no_aug", no_aug},
      {"no_aux", no_aux},
      {"no_llm", no_llm},
      {"gating_all", gating_all},
      {"gating", gating_names},
      {"shared_gate_noise", shared_gate_noise},
      {"separate_heads", separate_heads},
      {"valid_fraction", valid_fraction},
      {"grad_clip", grad_clip},
      {"vocab_size", vocab_size},
      {"smiles_max_len", smiles_max_len},
      {"threshold", threshold},
      {"encoder", encoder},
      {"smoe", smoe},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"epochs", "batch_size", "lr", "betas", "eps", "weight_decay", "schedule", "seed",
                  "eta1", "eta2", "augment", "no_aug", "no_aux", "no_llm", "gating_all", "gating",
                  "shared_gate_noise", "separate_heads", "valid_fraction", "grad_clip",
                  "vocab_size", "smiles_max_len", "threshold", "encoder", "smoe"},
                 "");
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    if (j.contains("betas")) {
      const auto b = j.at("betas").get<std::vector<double>>();
      if (b.size() != 2) throw ContractError("betas must hold two values");
      c.beta1 = b[0];
      c.beta2 = b[1];
    }
    c.eps = j.value("eps", c.eps);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.schedule = j.value("schedule", c.schedule);
    c.seed = j.value("seed", c.seed);
    c.eta1 = j.value("eta1", c.eta1);
    c.eta2 = j.value("eta2", c.eta2);
    if (j.contains("augment")) {
      reject_unknown(j.at("augment"), {"p", "lambda", "enabled"}, "augment");
      c.augment = j.at("augment").get<AugmentConfig>();
    }
    c.no_aug = j.value("no_aug", c.no_aug);
    c.no_aux = j.value("no_aux", c.no_aux);
    c.no_llm = j.value("no_llm", c.no_llm);
    c.gating_all = j.value("gating_all", c.gating_all);
    if (j.contains("gating")) {
      c.gating.clear();
      for (const auto& name : j.at("gating")) c.gating.push_back(parse_modality(name.get<std::string>()));
    }
    c.shared_gate_noise = j.value("shared_gate_noise", c.shared_gate_noise);
    c.separate_heads = j.value("separate_heads", c.separate_heads);
    c.valid_fraction = j.value("valid_fraction", c.valid_fraction);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.smiles_max_len = j.value("smiles_max_len", c.smiles_max_len);
    c.threshold = j.value("threshold", c.threshold);
    if (j.contains("encoder")) {
      reject_unknown(j.at("encoder"),
                     {"d_model", "n_layers", "n_heads", "d_ff", "max_len", "dropout", "positional"},
                     "encoder");
      c.encoder = j.at("encoder").get<EncoderConfig>();
    }
    if (j.contains("smoe")) {
      reject_unknown(j.at("smoe"), {"num_experts", "top_k", "d_expert", "balance_weight"}, "smoe");
      c.smoe = j.at("smoe").get<SmoeConfig>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("invalid config value: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("malformed config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

ModelConfig TrainConfig::model_config(std::size_t text_vocab_size) const {
  ModelConfig m;
  m.encoder = encoder;
  m.smoe = smoe;
  m.smiles_max_len = smiles_max_len;
  m.text_vocab_size = text_vocab_size;
  m.separate_heads = separate_heads;
  if (no_llm) m.modalities.assign(kRawModalities.begin(), kRawModalities.end());
  if (gating_all) {
    m.gating = m.modalities;
  } else {
    m.gating = gating;
    std::sort(m.gating.begin(), m.gating.end());
  }
  return m;
}

}  // namespace lifted
