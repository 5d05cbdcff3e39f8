#pragma once

#include <cstddef>
#include <vector>

#include "lifted/parameter.hpp"

namespace lifted {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

struct AdamWState {
  std::size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// One decoupled-weight-decay Adam update with learning rate `lr`:
//   theta <- theta * (1 - lr * wd), then the bias-corrected Adam step.
// Parameters without a gradient this step are left untouched.
void optimizer_step(std::vector<Parameter>& params, AdamWState& state, const AdamWConfig& cfg,
                    double lr);

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before scaling.
double clip_gradients(std::vector<Parameter>& params, double max_norm);

// base * (1 + cos(pi * step / total)) / 2, reaching 0 at step == total.
double cosine_lr(double base, std::size_t step, std::size_t total);

}  // namespace lifted
