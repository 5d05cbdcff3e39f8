#include "lifted/encoder.hpp"

#include <cmath>
#include <limits>

#include "lifted/errors.hpp"
#include "lifted/ops.hpp"

namespace lifted {

void EncoderConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_ff == 0 || max_len < 2) {
    throw ContractError("encoder dimensions must be positive (max_len >= 2)");
  }
  if (d_model % n_heads != 0) {
    throw ContractError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                        std::to_string(n_heads));
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ContractError("dropout must lie in [0, 1)");
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"d_model", c.d_model}, {"n_layers", c.n_layers},
       {"n_heads", c.n_heads}, {"d_ff", c.d_ff},
       {"max_len", c.max_len}, {"dropout", c.dropout},
       {"positional", c.positional == Positional::kLearned ? "learned" : "sinusoidal"}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.max_len = j.value("max_len", c.max_len);
  c.dropout = j.value("dropout", c.dropout);
  if (j.contains("positional")) {
    const auto p = j.at("positional").get<std::string>();
    if (p == "learned") {
      c.positional = Positional::kLearned;
    } else if (p == "sinusoidal") {
      c.positional = Positional::kSinusoidal;
    } else {
      throw ContractError("positional must be 'learned' or 'sinusoidal', got '" + p + "'");
    }
  }
}

Tensor make_position_table(Initializer& init, const EncoderConfig& cfg) {
  if (cfg.positional == Positional::kSinusoidal) {
    return init.add("positions", sinusoidal_table(cfg.max_len, cfg.d_model), false);
  }
  return init.normal("positions", {cfg.max_len, cfg.d_model}, 0.02);
}

ModalityEncoder::ModalityEncoder(Initializer& init, const std::string& prefix,
                                 const EncoderConfig& cfg, std::size_t vocab_size,
                                 TokenId cls_token, Tensor positions)
    : prefix_(prefix), cfg_(cfg), cls_token_(cls_token), positions_(std::move(positions)) {
  cfg_.validate();
  if (cls_token < 0 || static_cast<std::size_t>(cls_token) >= vocab_size) {
    throw ContractError("encoder " + prefix + ": [cls] id outside the vocabulary");
  }
  const std::size_t d = cfg.d_model;
  table_ = init.normal(prefix + ".embedding", {vocab_size, d}, 0.02);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string p = prefix + ".layer" + std::to_string(l);
    Layer layer;
    layer.ln1_gain = init.constant(p + ".ln1.gain", {d}, 1.0);
    layer.ln1_bias = init.constant(p + ".ln1.bias", {d}, 0.0);
    layer.w_qkv = init.linear_weight(p + ".attn.w_qkv", d, 3 * d);
    layer.b_qkv = init.linear_bias(p + ".attn.b_qkv", d, 3 * d);
    layer.w_out = init.linear_weight(p + ".attn.w_out", d, d);
    layer.b_out = init.linear_bias(p + ".attn.b_out", d, d);
    layer.ln2_gain = init.constant(p + ".ln2.gain", {d}, 1.0);
    layer.ln2_bias = init.constant(p + ".ln2.bias", {d}, 0.0);
    layer.w_ff1 = init.linear_weight(p + ".ffn.w1", d, cfg.d_ff);
    layer.b_ff1 = init.linear_bias(p + ".ffn.b1", d, cfg.d_ff);
    layer.w_ff2 = init.linear_weight(p + ".ffn.w2", cfg.d_ff, d);
    layer.b_ff2 = init.linear_bias(p + ".ffn.b2", cfg.d_ff, d);
    layers_.push_back(std::move(layer));
  }
  if (cfg.n_layers > 0) {
    final_gain_ = init.constant(prefix + ".ln_final.gain", {d}, 1.0);
    final_bias_ = init.constant(prefix + ".ln_final.bias", {d}, 0.0);
  }
}

Tensor ModalityEncoder::cls() const {
  const TokenId id[1] = {cls_token_};
  return embedding(table_, id);
}

Tensor ModalityEncoder::embed(const TokenSequence& seq) const {
  if (seq.ids.empty()) return Tensor::zeros({0, cfg_.d_model});
  return embedding(table_, seq.ids);
}

Tensor ModalityEncoder::attend(const Layer& layer, const Tensor& x, const Tensor& key_bias,
                               bool last, const EncodeContext& ctx) const {
  const std::size_t d = cfg_.d_model;
  const std::size_t dh = d / cfg_.n_heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Tensor y = layer_norm(x, layer.ln1_gain, layer.ln1_bias);
  const Tensor qkv = linear(y, layer.w_qkv, layer.b_qkv);
  Tensor q = slice(qkv, 1, 0, d);
  if (last) q = slice(q, 0, 0, 1);
  const Tensor k = slice(qkv, 1, d, d);
  const Tensor v = slice(qkv, 1, 2 * d, d);
  std::vector<Tensor> heads;
  heads.reserve(cfg_.n_heads);
  for (std::size_t h = 0; h < cfg_.n_heads; ++h) {
    const Tensor qh = slice(q, 1, h * dh, dh);
    const Tensor kh = slice(k, 1, h * dh, dh);
    const Tensor vh = slice(v, 1, h * dh, dh);
    const Tensor scores = add(scale(matmul(qh, transpose(kh)), inv_sqrt), key_bias);
    const Tensor probs = softmax(scores, 1);
    if (ctx.attention) ctx.attention->push_back(probs);
    heads.push_back(matmul(probs, vh));
  }
  Tensor out = linear(cfg_.n_heads == 1 ? heads[0] : concat(heads, 1), layer.w_out, layer.b_out);
  if (ctx.training && cfg_.dropout > 0.0 && ctx.dropout_rng) {
    out = dropout(out, cfg_.dropout, *ctx.dropout_rng);
  }
  return out;
}

Tensor ModalityEncoder::encode(const Tensor& embs, std::span<const std::uint8_t> mask,
                               const EncodeContext& ctx) const {
  if (embs.rank() != 2 || embs.dim(1) != cfg_.d_model || embs.dim(0) != mask.size()) {
    throw ContractError("encode: embeddings " + shape_to_string(embs.shape()) +
                        " do not match mask length " + std::to_string(mask.size()) +
                        " and d_model " + std::to_string(cfg_.d_model));
  }
  std::size_t len = mask.size();
  if (ctx.trim_padding) {
    while (len > 0 && !mask[len - 1]) --len;
  }
  if (len + 1 > positions_.dim(0)) {
    throw ContractError("encode: sequence of " + std::to_string(len) +
                        " tokens exceeds the position table");
  }
  const Tensor cls_row = cls();
  Tensor x = len == 0 ? cls_row : concat({cls_row, len == embs.dim(0) ? embs : slice(embs, 0, 0, len)}, 0);
  x = add(x, slice(positions_, 0, 0, len + 1));
  if (layers_.empty()) return x.dim(0) == 1 ? x : slice(x, 0, 0, 1);

  std::vector<double> bias(len + 1, 0.0);
  for (std::size_t t = 0; t < len; ++t) {
    if (!mask[t]) bias[t + 1] = -std::numeric_limits<double>::infinity();
  }
  const Tensor key_bias = Tensor::from({1, len + 1}, std::move(bias));
  const bool drop = ctx.training && cfg_.dropout > 0.0 && ctx.dropout_rng;

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const bool last = l + 1 == layers_.size();
    const Tensor attn = attend(layer, x, key_bias, last, ctx);
    // The last layer only needs the [cls] row downstream.
    x = add(last ? slice(x, 0, 0, 1) : x, attn);
    const Tensor y = layer_norm(x, layer.ln2_gain, layer.ln2_bias);
    Tensor ff = linear(gelu(linear(y, layer.w_ff1, layer.b_ff1)), layer.w_ff2, layer.b_ff2);
    if (drop) ff = dropout(ff, cfg_.dropout, *ctx.dropout_rng);
    x = add(x, ff);
  }
  return layer_norm(x, final_gain_, final_bias_);
}

std::size_t encoder_parameter_count(const EncoderConfig& cfg, std::size_t vocab_size) {
  const std::size_t d = cfg.d_model;
  const std::size_t per_layer = 4 * d + (d * 3 * d + 3 * d) + (d * d + d) +
                                (d * cfg.d_ff + cfg.d_ff) + (cfg.d_ff * d + d);
  return vocab_size * d + cfg.n_layers * per_layer + (cfg.n_layers > 0 ? 2 * d : 0);
}

}  // namespace lifted
