#pragma once

#include "poolforge/layers/params.hpp"

namespace poolforge::layers {

// Diagonal whitening statistics of the concatenated normalized residuals.
struct WhiteningState {
  Tensor& mean;  // [K*F]
  Tensor& var;   // [K*F], kept >= eps
  double momentum = 0.99;
  double eps = 1e-12;
};

// Registers "<prefix>/mean" (zeros) and "<prefix>/var" (ones).
void add_whitening_state(ParamStore& store, const std::string& prefix, std::size_t width);
WhiteningState bind_whitening_state(Binder& binder, const std::string& prefix);

// Per descriptor x_i: R(x_i) = [l2n(x_i - c_1), ..., l2n(x_i - c_K)] and
// phi_i = diag(var)^(-1/2) (R(x_i) - mean), with the statistics held before
// the call. Training mode then folds the batch moments of R into `white`. A null `white` skips whitening.
// [..., N, F] -> [..., N, K*F]. Aggregation (sum over N, unit weights) is
// left to the caller.
Var t_embed(Var x, Var centers, WhiteningState* white, bool training, double eps = 1e-12);

}  // namespace poolforge::layers
