#pragma once

#include <string>

#include "poolforge/layers/params.hpp"
#include "poolforge/random.hpp"

namespace poolforge::layers {

struct AttentionClusterConfig {
  std::size_t features = 0;
  std::size_t clusters = 1;
  // Width of the logit network's hidden layer; 0 means features / 2.
  std::size_t hidden = 0;
  // When set, alpha and beta are per-feature vectors instead of scalars.
  bool vector_shift = false;
  double eps = 1e-12;

  std::size_t hidden_width() const { return hidden ? hidden : std::max<std::size_t>(1, features / 2); }
};

// Per cluster k: logit network tanh(x W1_k + b1_k) w2_k + b2_k over frames,
// and the shift pair (alpha_k, beta_k).
struct AttentionClusterParams {
  Var w1;     // [K, F, H]
  Var b1;     // [K, 1, H]
  Var w2;     // [K, H, 1]
  Var b2;     // [K, 1, 1]
  Var alpha;  // [K, 1, 1] or [K, 1, F]
  Var beta;   // same shape as alpha
};

void init_attention_cluster(ParamStore& store, const std::string& prefix, const AttentionClusterConfig& config,
                            Rng& rng);
AttentionClusterParams bind_attention_cluster(Binder& binder, const std::string& prefix);

// X [..., N, F] -> [..., K*F]. Cluster k contributes
//   psi_k = (alpha_k * a_k X + beta_k) / (sqrt(N) * ||alpha_k * a_k X + beta_k||)
// where a_k = softmax over frames of the logit network. Norms below eps give
// a zero block.
Var attention_cluster(Var x, const AttentionClusterParams& params, double eps = 1e-12);

}  // namespace poolforge::layers
