#include "poolforge/layers/context_gating.hpp"

#include <cmath>

#include "poolforge/error.hpp"

namespace poolforge::layers {

void init_context_gating(ParamStore& store, const std::string& prefix, std::size_t width, Rng& rng) {
  if (width == 0) throw ConfigError("context gating: width must be positive");
  store.add_param(join(prefix, "weights"), rng.normal_tensor({width, width}, 1.0 / std::sqrt(static_cast<double>(width))));
  store.add_param(join(prefix, "bias"), Tensor::zeros({width}));
}

ContextGatingParams bind_context_gating(Binder& binder, const std::string& prefix) {
  return ContextGatingParams{binder.param(join(prefix, "weights")), binder.param(join(prefix, "bias"))};
}

Var context_gating(Var x, const ContextGatingParams& params) {
  if (params.weights.dim(0) != x.dim(-1))
    throw DimensionError("context_gating: input width " + std::to_string(x.dim(-1)) + " vs weights " +
                         shape_string(params.weights.shape()));
  if (x.value().rank() == 1) {
    const Shape original = x.shape();
    const Var row = reshape(x, {1, original[0]});
    return reshape(sigmoid(matmul(row, params.weights) + params.bias) * row, original);
  }
  return sigmoid(matmul(x, params.weights) + params.bias) * x;
}

}  // namespace poolforge::layers
