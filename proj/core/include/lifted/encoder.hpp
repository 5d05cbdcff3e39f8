#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lifted/init.hpp"
#include "lifted/random.hpp"
#include "lifted/tensor.hpp"
#include "lifted/tokenizer.hpp"

namespace lifted {

enum class Positional { kLearned, kSinusoidal };

struct EncoderConfig {
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 128;
  // Rows of the position table; covers [cls] plus max_len - 1 tokens.
  std::size_t max_len = 128;
  double dropout = 0.1;
  Positional positional = Positional::kLearned;

  // Throws ContractError.
  void validate() const;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

// Shared across modalities.
Tensor make_position_table(Initializer& init, const EncoderConfig& cfg);

struct EncodeContext {
  bool training = false;
  Rng* dropout_rng = nullptr;
  // Drop trailing padding before attention. Exact because padded keys carry
  // zero attention weight and the output reads only t = 0.
  bool trim_padding = true;
  // When set, receives per layer and head the attention probabilities.
  std::vector<Tensor>* attention = nullptr;
};

class ModalityEncoder {
 public:
  ModalityEncoder(Initializer& init, const std::string& prefix, const EncoderConfig& cfg,
                  std::size_t vocab_size, TokenId cls_token, Tensor positions);

  // [T, d] token embeddings; ids outside the table raise ContractError.
  Tensor embed(const TokenSequence& seq) const;
  // [1, d]: the t = 0 output after prepending [cls] and adding positions.
  Tensor encode(const Tensor& embs, std::span<const std::uint8_t> mask,
                const EncodeContext& ctx = {}) const;

  const Tensor& table() const noexcept { return table_; }
  // [1, d]: row [cls]_k of the embedding table.
  Tensor cls() const;
  TokenId cls_token() const noexcept { return cls_token_; }
  const std::string& prefix() const noexcept { return prefix_; }

 private:
  struct Layer {
    Tensor ln1_gain, ln1_bias, w_qkv, b_qkv, w_out, b_out;
    Tensor ln2_gain, ln2_bias, w_ff1, b_ff1, w_ff2, b_ff2;
  };
  Tensor attend(const Layer& layer, const Tensor& x, const Tensor& key_bias, bool last,
                const EncodeContext& ctx) const;

  std::string prefix_;
  EncoderConfig cfg_;
  TokenId cls_token_;
  Tensor table_;
  Tensor positions_;
  std::vector<Layer> layers_;
  Tensor final_gain_, final_bias_;
};

// Parameters one encoder owns, excluding the shared position table.
std::size_t encoder_parameter_count(const EncoderConfig& cfg, std::size_t vocab_size);

}  // namespace lifted
