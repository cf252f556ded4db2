#pragma once

#include <string>

#include "poolforge/layers/params.hpp"
#include "poolforge/random.hpp"

namespace poolforge::layers {

struct ContextGatingParams {
  Var weights;  // [D, D]
  Var bias;     // [D]
};

void init_context_gating(ParamStore& store, const std::string& prefix, std::size_t width, Rng& rng);
ContextGatingParams bind_context_gating(Binder& binder, const std::string& prefix);

// sigmoid(x W + b) * x over the last axis.
Var context_gating(Var x, const ContextGatingParams& params);

}  // namespace poolforge::layers
