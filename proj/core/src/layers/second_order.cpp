#include "poolforge/layers/second_order.hpp"

#include <cmath>

#include "poolforge/error.hpp"

namespace poolforge::layers {

void SecondOrderConfig::validate() const {
  if (features == 0 || projected == 0 || clusters == 0)
    throw ConfigError("second order: features, projected width and clusters must be positive");
  if (projected >= features)
    throw ConfigError("second order: projected width " + std::to_string(projected) + " must be below feature width " +
                      std::to_string(features));
}

void init_second_order(ParamStore& store, const std::string& prefix, const SecondOrderConfig& config, Rng& rng) {
  config.validate();
  const std::size_t f = config.features;
  const std::size_t p = config.projected;
  const std::size_t c = config.clusters;
  store.add_param(join(prefix, "projection"), rng.normal_tensor({f, p}, 1.0 / std::sqrt(static_cast<double>(f))));
  store.add_param(join(prefix, "centers"), rng.normal_tensor({c, p}, 0.1));
  store.add_param(join(prefix, "keys"), rng.normal_tensor({p, c}, 1.0 / std::sqrt(static_cast<double>(p))));
  store.add_param(join(prefix, "bias"), Tensor::zeros({c}));
}

SecondOrderParams bind_second_order(Binder& binder, const std::string& prefix, const NetVladParams& first_order) {
  return SecondOrderParams{binder.param(join(prefix, "projection")), binder.param(join(prefix, "centers")),
                           binder.param(join(prefix, "keys")), binder.param(join(prefix, "bias")), first_order};
}

Var second_order_embed(Var x, const SecondOrderParams& params, double temperature) {
  const Shape xs = x.shape();
  if (xs.size() < 2) throw DimensionError("second_order_embed: expected [..., N, F], got " + shape_string(xs));
  const std::size_t f = xs.back();
  const std::size_t n = xs[xs.size() - 2];
  const std::size_t c = params.first_order.centers.dim(0);
  const std::size_t p = params.projection.dim(1);
  if (params.projection.dim(0) != f) throw DimensionError("second_order_embed: projection does not match input width");
  if (p >= f) throw ConfigError("second_order_embed: projected width must be below feature width");
  if (params.centers.dim(0) != c) throw ConfigError("second_order_embed: both blocks must share the cluster count");
  if (!params.first_order.keys || !params.first_order.bias)
    throw ConfigError("second_order_embed: first-order assignment parameters missing");

  const Shape prefix(xs.begin(), xs.end() - 2);
  auto with_prefix = [&](std::initializer_list<std::size_t> tail) {
    Shape s = prefix;
    s.insert(s.end(), tail);
    return s;
  };

  // Zeroth and first order on the full features.
  const Var a = netvlad_assignment(x, *params.first_order.keys, *params.first_order.bias, temperature);  // [..., N, C]
  const Var a4 = reshape(a, with_prefix({n, c, 1}));
  const Var v = reshape(x, with_prefix({n, 1, f})) - params.first_order.centers;  // [..., N, C, F]
  const Var first = a4 * v;

  // Second order on projected features with their own centers and assignment.
  const Var px = matmul(x, params.projection);                                    // [..., N, F']
  const Var a2 = reshape(netvlad_assignment(px, params.keys, params.bias, temperature), with_prefix({n, c, 1}));
  const Var vp = reshape(px, with_prefix({n, 1, p})) - params.centers;            // [..., N, C, F']
  const Var outer = reshape(vp, with_prefix({n, c, p, 1})) * reshape(vp, with_prefix({n, c, 1, p}));
  const Var second = a2 * reshape(outer, with_prefix({n, c, p * p}));

  const Var blocks = concat({a4, first, second}, -1);                             // [..., N, C, 1+F+F'^2]
  return reshape(blocks, with_prefix({n, c * (1 + f + p * p)}));
}

}  // namespace poolforge::layers
