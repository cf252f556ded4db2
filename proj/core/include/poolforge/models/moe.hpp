#pragma once

#include <string>

#include "poolforge/layers/params.hpp"
#include "poolforge/random.hpp"

namespace poolforge::models {

struct MoeParams {
  Var gate_weights;    // [D, L*(E+1)]
  Var gate_bias;       // [L*(E+1)]
  Var expert_weights;  // [D, L*E]
  Var expert_bias;     // [L*E]
  std::size_t experts = 1;
  std::size_t labels = 1;
};

void init_moe(layers::ParamStore& store, const std::string& prefix, std::size_t input, std::size_t experts,
              std::size_t labels, Rng& rng);
MoeParams bind_moe(layers::Binder& binder, const std::string& prefix, std::size_t experts, std::size_t labels);

// p_l = sum_{e<E} g_le * sigmoid(expert_le(v)), with the gates g_l softmax-
// normalized over E experts plus one dummy expert that always predicts 0.
// [..., D] -> [..., L].
Var moe_head(Var v, const MoeParams& params);

}  // namespace poolforge::models
