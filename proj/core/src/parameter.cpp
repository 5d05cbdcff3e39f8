#include "lifted/parameter.hpp"

#include "lifted/errors.hpp"

namespace lifted {

Tensor ParameterStore::add(std::string name, Tensor value, bool trainable) {
  if (index_.contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  value.set_requires_grad(trainable);
  index_.emplace(name, params_.size());
  params_.push_back({std::move(name), value, trainable});
  return value;
}

const Parameter* ParameterStore::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter* ParameterStore::find(std::string_view name) {
  auto it = index_.find(std::string(name));
  return it == index_.end() ? nullptr : &params_[it->second];
}

std::size_t ParameterStore::element_count(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (std::string_view(p.name).starts_with(prefix)) n += p.tensor.numel();
  }
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace lifted
