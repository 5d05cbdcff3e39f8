#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lifted/tensor.hpp"

namespace lifted {

struct Parameter {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

// Owns the named leaves of a model in registration order.
class ParameterStore {
 public:
  // Registers `value` under `name`; duplicate names raise ContractError.
  Tensor add(std::string name, Tensor value, bool trainable = true);

  const std::vector<Parameter>& all() const noexcept { return params_; }
  std::vector<Parameter>& all() noexcept { return params_; }
  const Parameter* find(std::string_view name) const;
  Parameter* find(std::string_view name);

  std::size_t size() const noexcept { return params_.size(); }
  // Total element count of parameters whose name starts with `prefix`.
  std::size_t element_count(std::string_view prefix = {}) const;
  void zero_grad();

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace lifted
