#include "poolforge/layers/attention_cluster.hpp"

#include <cmath>

#include "poolforge/error.hpp"

namespace poolforge::layers {

void init_attention_cluster(ParamStore& store, const std::string& prefix, const AttentionClusterConfig& config,
                            Rng& rng) {
  if (config.features == 0 || config.clusters == 0) throw ConfigError("attention cluster: empty configuration");
  const std::size_t f = config.features;
  const std::size_t k = config.clusters;
  const std::size_t h = config.hidden_width();
  store.add_param(join(prefix, "w1"), rng.normal_tensor({k, f, h}, 1.0 / std::sqrt(static_cast<double>(f))));
  store.add_param(join(prefix, "b1"), Tensor::zeros({k, 1, h}));
  store.add_param(join(prefix, "w2"), rng.normal_tensor({k, h, 1}, 1.0 / std::sqrt(static_cast<double>(h))));
  store.add_param(join(prefix, "b2"), Tensor::zeros({k, 1, 1}));
  const Shape shift = config.vector_shift ? Shape{k, 1, f} : Shape{k, 1, 1};
  store.add_param(join(prefix, "alpha"), Tensor::full(shift, 1.0));
  store.add_param(join(prefix, "beta"), Tensor::zeros(shift));
}

AttentionClusterParams bind_attention_cluster(Binder& binder, const std::string& prefix) {
  return AttentionClusterParams{binder.param(join(prefix, "w1")),    binder.param(join(prefix, "b1")),
                                binder.param(join(prefix, "w2")),    binder.param(join(prefix, "b2")),
                                binder.param(join(prefix, "alpha")), binder.param(join(prefix, "beta"))};
}

Var attention_cluster(Var x, const AttentionClusterParams& params, double eps) {
  const Shape xs = x.shape();
  if (xs.size() < 2) throw DimensionError("attention_cluster: expected [..., N, F], got " + shape_string(xs));
  const std::size_t n = xs[xs.size() - 2];
  const std::size_t f = xs[xs.size() - 1];
  const std::size_t k = params.w1.dim(0);
  if (params.w1.dim(1) != f)
    throw DimensionError("attention_cluster: input width " + std::to_string(f) + " vs weights " +
                         shape_string(params.w1.shape()));

  // [..., 1, N, F] so that the cluster axis broadcasts against the weights.
  Shape lifted(xs.begin(), xs.end() - 2);
  lifted.insert(lifted.end(), {1, n, f});
  const Var x4 = reshape(x, lifted);

  const Var hidden = tanh(matmul(x4, params.w1) + params.b1);    // [..., K, N, H]
  const Var logits = matmul(hidden, params.w2) + params.b2;       // [..., K, N, 1]
  const Var weights = softmax(logits, -2);                        // over frames
  const Var pooled = matmul(transpose(weights), x4);              // [..., K, 1, F]
  const Var shifted = params.alpha * pooled + params.beta;
  const Var unit = l2_normalize(shifted, -1, eps);
  const Var scaled = scale(unit, 1.0 / std::sqrt(static_cast<double>(n)));

  Shape out(xs.begin(), xs.end() - 2);
  out.push_back(k * f);
  return reshape(scaled, out);
}

}  // namespace poolforge::layers
