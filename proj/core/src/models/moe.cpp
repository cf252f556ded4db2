#include "poolforge/models/moe.hpp"

#include <cmath>

#include "poolforge/error.hpp"

namespace poolforge::models {

using layers::join;

void init_moe(layers::ParamStore& store, const std::string& prefix, std::size_t input, std::size_t experts,
              std::size_t labels, Rng& rng) {
  if (input == 0 || experts == 0 || labels == 0) throw ConfigError("moe: extents must be positive");
  const double s = 1.0 / std::sqrt(static_cast<double>(input));
  store.add_param(join(prefix, "gate_weights"), rng.normal_tensor({input, labels * (experts + 1)}, s));
  store.add_param(join(prefix, "gate_bias"), Tensor::zeros({labels * (experts + 1)}));
  store.add_param(join(prefix, "expert_weights"), rng.normal_tensor({input, labels * experts}, s));
  store.add_param(join(prefix, "expert_bias"), Tensor::zeros({labels * experts}));
}

MoeParams bind_moe(layers::Binder& binder, const std::string& prefix, std::size_t experts, std::size_t labels) {
  return MoeParams{binder.param(join(prefix, "gate_weights")),   binder.param(join(prefix, "gate_bias")),
                   binder.param(join(prefix, "expert_weights")), binder.param(join(prefix, "expert_bias")),
                   experts,
                   labels};
}

Var moe_head(Var v, const MoeParams& params) {
  const std::size_t e = params.experts;
  const std::size_t l = params.labels;
  if (params.gate_weights.dim(-1) != l * (e + 1) || params.expert_weights.dim(-1) != l * e)
    throw ConfigError("moe: weight shapes do not match experts/labels");
  const Shape vs = v.shape();
  const bool single = vs.size() == 1;
  const Var rows = single ? reshape(v, {1, vs[0]}) : v;
  const Shape prefix(rows.shape().begin(), rows.shape().end() - 1);
  auto with_prefix = [&](std::initializer_list<std::size_t> tail) {
    Shape s = prefix;
    s.insert(s.end(), tail);
    return s;
  };

  const Var gate_logits = reshape(matmul(rows, params.gate_weights) + params.gate_bias, with_prefix({l, e + 1}));
  const Var gates = slice(softmax(gate_logits, -1), -1, 0, e);  // drop the dummy expert
  const Var experts = sigmoid(reshape(matmul(rows, params.expert_weights) + params.expert_bias, with_prefix({l, e})));
  const Var probs = reduce_sum(gates * experts, -1);            // [..., L]
  return single ? reshape(probs, {l}) : probs;
}

}  // namespace poolforge::models
