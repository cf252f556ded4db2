#include "poolforge/layers/netvlad.hpp"

#include <cmath>

#include "poolforge/error.hpp"

namespace poolforge::layers {

void init_netvlad(ParamStore& store, const std::string& prefix, const NetVladConfig& config, Rng& rng) {
  if (config.features == 0 || config.clusters == 0) throw ConfigError("netvlad: features and clusters must be positive");
  const std::size_t f = config.features;
  const std::size_t c = config.clusters;
  store.add_param(join(prefix, "centers"), rng.normal_tensor({c, f}, 0.1));
  if (config.with_assignment) {
    store.add_param(join(prefix, "keys"), rng.normal_tensor({f, c}, 1.0 / std::sqrt(static_cast<double>(f))));
    store.add_param(join(prefix, "bias"), Tensor::zeros({c}));
  }
}

NetVladParams bind_netvlad(Binder& binder, const std::string& prefix, const NetVladConfig& config) {
  NetVladParams p;
  p.centers = binder.param(join(prefix, "centers"));
  if (config.with_assignment) {
    p.keys = binder.param(join(prefix, "keys"));
    p.bias = binder.param(join(prefix, "bias"));
  }
  return p;
}

Var netvlad_assignment(Var x, Var keys, Var bias, double temperature) {
  Var logits = matmul(x, keys) + bias;
  if (temperature != 1.0) logits = scale(logits, temperature);
  return softmax(logits, -1);
}

Var netvlad(Var x, const NetVladParams& params, const std::optional<Var>& similarities, double temperature) {
  const Shape& xs = x.shape();
  if (xs.size() < 2) throw DimensionError("netvlad: expected [..., N, F], got " + shape_string(xs));
  const std::size_t f = xs.back();
  const std::size_t n = xs[xs.size() - 2];
  const std::size_t c = params.centers.dim(0);
  if (params.centers.dim(1) != f)
    throw DimensionError("netvlad: input width " + std::to_string(f) + " vs centers " +
                         shape_string(params.centers.shape()));

  Var a;
  if (similarities) {
    a = *similarities;
    const Shape& as = a.shape();
    if (as.size() != xs.size() || as[as.size() - 2] != n || as.back() != c)
      throw DimensionError("netvlad: similarities " + shape_string(as) + " do not match input " + shape_string(xs) +
                           " and " + std::to_string(c) + " clusters");
    const auto values = a.value().data();
    for (std::size_t r = 0; r < values.size() / c; ++r) {
      double total = 0.0;
      for (std::size_t j = 0; j < c; ++j) total += values[r * c + j];
      if (std::abs(total - 1.0) > kSimilarityRowTolerance)
        throw ContractError("netvlad: similarity row " + std::to_string(r) + " sums to " + std::to_string(total));
    }
  } else {
    if (!params.keys || !params.bias) throw ConfigError("netvlad: no similarities and no assignment parameters");
    a = netvlad_assignment(x, *params.keys, *params.bias, temperature);
  }

  // sum_k a_kj x_k - (sum_k a_kj) c_j, without materializing residuals.
  const Var at = transpose(a);                                  // [..., C, N]
  const Var weighted = matmul(at, x);                           // [..., C, F]
  const Var mass = reduce_sum(at, -1, true);                    // [..., C, 1]
  return weighted - mass * params.centers;
}

}  // namespace poolforge::layers
