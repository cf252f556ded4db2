#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "poolforge/layers/params.hpp"
#include "poolforge/tensor.hpp"

namespace poolforge::train {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  bool operator==(const AdamOptions&) const = default;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  // First and second moments keyed by parameter name; created on first use.
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

// One bias-corrected Adam update of every parameter in `params`. Parameters
// missing from `grads` are treated as having a zero gradient. All gradients
// are checked before anything is modified: a non-finite entry throws
// NumericError naming the parameter and leaves params and state untouched.
void adam_step(layers::ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state, double lr);

// Update of a single tensor at (1-based) step `t`.
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::uint64_t t, double lr,
                 const AdamOptions& options);

}  // namespace poolforge::train
