#pragma once

#include <optional>
#include <string>

#include "poolforge/layers/params.hpp"
#include "poolforge/random.hpp"

namespace poolforge::layers {

struct NetVladConfig {
  std::size_t features = 0;
  std::size_t clusters = 1;
  // Multiplies the assignment logits; large values approach hard assignment.
  double temperature = 1.0;
  // False when similarities come from elsewhere (attention-based variant).
  bool with_assignment = true;
};

struct NetVladParams {
  Var centers;               // [C, F]
  std::optional<Var> keys;   // [F, C]
  std::optional<Var> bias;   // [C]
};

void init_netvlad(ParamStore& store, const std::string& prefix, const NetVladConfig& config, Rng& rng);
NetVladParams bind_netvlad(Binder& binder, const std::string& prefix, const NetVladConfig& config);

// Soft assignment softmax(temperature * (X keys + bias)) over clusters:
// [..., N, F] -> [..., N, C].
Var netvlad_assignment(Var x, Var keys, Var bias, double temperature = 1.0);

// Tolerance on the row sums of externally supplied similarities.
inline constexpr double kSimilarityRowTolerance = 1e-6;

// out[j] = sum_k a_j(x_k) (x_k - c_j): [..., N, F] -> [..., C, F].
// Uses `similarities` ([..., N, C], rows summing to 1) when given, otherwise
// the params' own assignment.
Var netvlad(Var x, const NetVladParams& params, const std::optional<Var>& similarities = std::nullopt,
            double temperature = 1.0);

}  // namespace poolforge::layers
