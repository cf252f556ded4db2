#pragma once

#include <string>

#include "poolforge/layers/netvlad.hpp"

namespace poolforge::layers {

struct SecondOrderConfig {
  std::size_t features = 0;   // F
  std::size_t projected = 0;  // F', strictly below F
  std::size_t clusters = 1;   // C, shared by both blocks
  double temperature = 1.0;

  std::size_t embed_width() const { return clusters * (1 + features + projected * projected); }
  void validate() const;
};

struct SecondOrderParams {
  Var projection;        // [F, F']
  Var centers;           // [C, F'], second-order centers
  Var keys;              // [F', C]
  Var bias;              // [C]
  NetVladParams first_order;
};

// Second-order parameters live under <prefix>; the first-order NetVLAD
// parameters are bound separately so they can be shared with other paths.
void init_second_order(ParamStore& store, const std::string& prefix, const SecondOrderConfig& config, Rng& rng);
SecondOrderParams bind_second_order(Binder& binder, const std::string& prefix, const NetVladParams& first_order);

// Per descriptor x_i and cluster j:
//   [a_j; a_j (x_i - c_j); a'_j vec(v'_ij v'_ij^T)]
// with v'_ij = P x_i - c'_j and a' the assignment computed on projected
// features. [..., N, F] -> [..., N, C*(1 + F + F'^2)].
Var second_order_embed(Var x, const SecondOrderParams& params, double temperature = 1.0);

}  // namespace poolforge::layers
