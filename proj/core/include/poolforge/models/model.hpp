#pragma once

#include <cstdint>

#include "poolforge/layers/params.hpp"
#include "poolforge/models/model_config.hpp"

namespace poolforge::models {

using layers::Binder;
using layers::ParamStore;

// Fresh parameters and running statistics for `config`, drawn from `seed`.
ParamStore init_model(const ModelConfig& config, std::uint64_t seed);

// Width of the concatenated pooled representation fed to the projection.
std::size_t pooled_width(const ModelConfig& config);

// Frames [B, N, Fv + Fa] (or a single video [N, Fv + Fa]) -> label
// probabilities [B, L] (or [L]). Video and audio columns are pooled by
// separate layer stacks and concatenated before the projection. Training
// mode is taken from the binder.
Var forward(Binder& binder, const ModelConfig& config, Var frames);

// Per-architecture entry points; forward() dispatches on config.architecture.
Var forward_baseline(Binder& binder, const ModelConfig& config, Var frames);
Var forward_attention_enhanced(Binder& binder, const ModelConfig& config, Var frames);
Var forward_attention_netvlad(Binder& binder, const ModelConfig& config, Var frames);
Var forward_second_order(Binder& binder, const ModelConfig& config, Var frames);

// Pooled representation before projection, [B, pooled_width].
Var pool(Binder& binder, const ModelConfig& config, Var frames);

// Mean over the batch of the per-video summed binary cross-entropy.
Var classification_loss(Var probs, const Tensor& targets);

// Inference-mode forward on a fresh tape.
Tensor predict(ParamStore& params, const ModelConfig& config, const Tensor& frames);

}  // namespace poolforge::models

#include "poolforge/grad_check.hpp"

namespace poolforge::models {

// Small dimensions at which every coordinate of every parameter can be
// finite-difference checked in well under a second.
ModelConfig toy_config(Architecture arch);

// Gradient check of the training-mode loss with respect to the input frames
// and every parameter, on a random batch of `batch` videos drawn from `seed`.
GradCheckReport grad_check_model(const ModelConfig& config, std::uint64_t seed, const GradCheckOptions& options = {},
                                 std::size_t batch = 2);

}  // namespace poolforge::models
