#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lifted/tensor.hpp"

namespace lifted {

// Elementwise binary operations with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);
Tensor neg(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor softplus(const Tensor& x);
// tanh approximation.
Tensor gelu(const Tensor& x);
Tensor relu(const Tensor& x);

// 2-d matrix product.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// Reduces one axis, keeping it with extent 1.
Tensor sum(const Tensor& x, std::size_t axis);

// Max-subtracted softmax along `axis`. -inf entries map to exactly 0; an
// axis holding only -inf raises DegenerateDistributionError.
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);

// Keeps the k largest entries of every row along the last axis (ties go to
// the lower index) and replaces the rest with -inf. Gradient flows through
// the kept entries only.
Tensor topk_mask(const Tensor& x, std::size_t k);

// Normalizes over the last axis, then applies gain and bias (both of the
// last axis' extent).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// Rows of `table` ([V, d]) selected by `ids`; result is [ids.size(), d].
Tensor embedding(const Tensor& table, std::span<const std::int32_t> ids);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& x, std::size_t axis, std::size_t start, std::size_t length);

// Mean cross entropy of row-wise logits [N, C] against class indices.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

// Inverted dropout. Identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng);

// x @ weight + bias, with weight [in, out] and bias [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

}  // namespace lifted
