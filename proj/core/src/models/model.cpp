#include "poolforge/models/model.hpp"

#include <array>
#include <cmath>

#include "poolforge/error.hpp"
#include "poolforge/layers/attention.hpp"
#include "poolforge/layers/context_gating.hpp"
#include "poolforge/layers/netvlad.hpp"
#include "poolforge/layers/second_order.hpp"
#include "poolforge/layers/t_embed.hpp"
#include "poolforge/models/moe.hpp"
#include "poolforge/random.hpp"

namespace poolforge::models {

using layers::join;

namespace {

constexpr double kNormEps = 1e-12;

struct Stream {
  const char* name;
  std::size_t features;
  std::size_t offset;
};

std::array<Stream, 2> streams(const ModelConfig& c) {
  return {Stream{"video", c.video_features, 0}, Stream{"audio", c.audio_features, c.video_features}};
}

layers::NetVladConfig netvlad_config(const ModelConfig& c, std::size_t features, bool with_assignment) {
  return layers::NetVladConfig{features, c.clusters, c.temperature, with_assignment};
}

layers::TransformerConfig encoder_config(const ModelConfig& c, std::size_t features, std::size_t out_width = 0) {
  layers::TransformerConfig t;
  t.width = features;
  t.heads = c.heads;
  t.out_width = out_width;
  t.inner_batch_norm = c.inner_batch_norm;
  return t;
}

layers::SecondOrderConfig second_order_config(const ModelConfig& c, std::size_t features) {
  return layers::SecondOrderConfig{features, c.projected, c.clusters, c.temperature};
}

BatchNormOptions bn_options(const Binder& binder, const ModelConfig& c) {
  return BatchNormOptions{binder.training(), c.bn_momentum, c.bn_eps};
}

// Batched view [B, N, F] of the input plus a flag to undo it on the output.
struct Batched {
  Var frames;
  bool single;
};

Batched as_batch(const ModelConfig& c, Var frames) {
  const Shape& s = frames.shape();
  if (s.size() == 2) {
    if (s[1] != c.input_width())
      throw DimensionError("model: frames " + shape_string(s) + " do not match input width " +
                           std::to_string(c.input_width()));
    return {reshape(frames, {1, s[0], s[1]}), true};
  }
  if (s.size() != 3 || s[2] != c.input_width())
    throw DimensionError("model: expected frames [B, N, " + std::to_string(c.input_width()) + "], got " +
                         shape_string(s));
  return {frames, false};
}

// NetVLAD output [B, C, F] -> intra-normalized per cluster.
Var intra_normalize(Var vlad) { return l2_normalize(vlad, -1, kNormEps); }

// [B, C, F] -> [B, C*F] followed by a global L2 normalization.
Var flatten_normalize(Var x) {
  const Shape& s = x.shape();
  return l2_normalize(reshape(x, {s[0], s[1] * s[2]}), -1, kNormEps);
}

Var sum_frames_normalize(Var x) { return l2_normalize(reduce_sum(x, -2), -1, kNormEps); }

Var pool_stream(Binder& binder, const ModelConfig& c, Architecture arch, const Stream& s, Var x) {
  const std::string p = s.name;
  const BatchNormOptions bn = bn_options(binder, c);
  switch (arch) {
    case Architecture::kBaselineNetVlad: {
      const auto nv = layers::bind_netvlad(binder, join(p, "netvlad"), netvlad_config(c, s.features, true));
      return flatten_normalize(intra_normalize(layers::netvlad(x, nv, std::nullopt, c.temperature)));
    }
    case Architecture::kAttentionEnhanced: {
      const auto nv = layers::bind_netvlad(binder, join(p, "netvlad"), netvlad_config(c, s.features, true));
      const auto f1 = layers::bind_transformer(binder, join(p, "frame_encoder"), encoder_config(c, s.features));
      const auto f2 = layers::bind_transformer(binder, join(p, "cluster_encoder"), encoder_config(c, s.features));
      const Var frames = layers::transformer_encoder(x, f1, bn);
      const Var vlad = intra_normalize(layers::netvlad(frames, nv, std::nullopt, c.temperature));
      return flatten_normalize(layers::transformer_encoder(vlad, f2, bn));
    }
    case Architecture::kAttentionNetVlad: {
      const auto nv = layers::bind_netvlad(binder, join(p, "netvlad"), netvlad_config(c, s.features, false));
      const auto g1 = layers::bind_transformer(binder, join(p, "frame_encoder"), encoder_config(c, s.features));
      const auto g2 =
          layers::bind_transformer(binder, join(p, "similarity_encoder"), encoder_config(c, s.features, c.clusters));
      const Var encoded = layers::transformer_encoder(x, g1, bn);
      Var logits = layers::transformer_encoder_star(encoded, g2, bn);  // [B, N, C]
      if (c.temperature != 1.0) logits = scale(logits, c.temperature);
      const Var similarities = softmax(logits, -1);
      return flatten_normalize(intra_normalize(layers::netvlad(x, nv, similarities)));
    }
    case Architecture::kSecondOrder: {
      const auto nv = layers::bind_netvlad(binder, join(p, "netvlad"), netvlad_config(c, s.features, true));
      auto white = layers::bind_whitening_state(binder, join(p, "whitening"));
      const auto so = layers::bind_second_order(binder, join(p, "second_order"), nv);
      const Var first = sum_frames_normalize(layers::t_embed(x, nv.centers, &white, binder.training(), kNormEps));
      const Var second = sum_frames_normalize(layers::second_order_embed(x, so, c.temperature));
      return concat({first, second}, -1);
    }
  }
  throw ConfigError("model: unhandled architecture");
}

Var pool_as(Binder& binder, const ModelConfig& c, Architecture arch, Var frames) {
  std::vector<Var> pooled;
  for (const Stream& s : streams(c)) pooled.push_back(pool_stream(binder, c, arch, s, slice(frames, -1, s.offset, s.features)));
  return concat(pooled, -1);
}

Var classify(Binder& binder, const ModelConfig& c, Var pooled) {
  const Var hidden = matmul(pooled, binder.param("projection/weights")) + binder.param("projection/bias");
  const Var gated = layers::context_gating(hidden, layers::bind_context_gating(binder, "gating"));
  return moe_head(gated, bind_moe(binder, "moe", c.experts, c.labels));
}

Var run(Binder& binder, const ModelConfig& c, Architecture arch, Var frames) {
  c.validate();
  const Batched b = as_batch(c, frames);
  const Var probs = classify(binder, c, pool_as(binder, c, arch, b.frames));
  return b.single ? reshape(probs, {c.labels}) : probs;
}

}  // namespace

std::size_t pooled_width(const ModelConfig& c) {
  std::size_t width = 0;
  for (const Stream& s : streams(c)) {
    if (c.architecture == Architecture::kSecondOrder)
      width += c.clusters * s.features + second_order_config(c, s.features).embed_width();
    else
      width += c.clusters * s.features;
  }
  return width;
}

ParamStore init_model(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  ParamStore store;
  Rng rng(seed);
  for (const Stream& s : streams(c)) {
    const std::string p = s.name;
    switch (c.architecture) {
      case Architecture::kBaselineNetVlad:
        layers::init_netvlad(store, join(p, "netvlad"), netvlad_config(c, s.features, true), rng);
        break;
      case Architecture::kAttentionEnhanced:
        layers::init_netvlad(store, join(p, "netvlad"), netvlad_config(c, s.features, true), rng);
        layers::init_transformer(store, join(p, "frame_encoder"), encoder_config(c, s.features), rng);
        layers::init_transformer(store, join(p, "cluster_encoder"), encoder_config(c, s.features), rng);
        break;
      case Architecture::kAttentionNetVlad:
        layers::init_netvlad(store, join(p, "netvlad"), netvlad_config(c, s.features, false), rng);
        layers::init_transformer(store, join(p, "frame_encoder"), encoder_config(c, s.features), rng);
        layers::init_transformer(store, join(p, "similarity_encoder"), encoder_config(c, s.features, c.clusters), rng);
        break;
      case Architecture::kSecondOrder:
        layers::init_netvlad(store, join(p, "netvlad"), netvlad_config(c, s.features, true), rng);
        layers::add_whitening_state(store, join(p, "whitening"), c.clusters * s.features);
        layers::init_second_order(store, join(p, "second_order"), second_order_config(c, s.features), rng);
        break;
    }
  }
  // The pooled input is a concatenation of unit-norm blocks, so unit-variance
  // weights give O(1) hidden activations.
  const std::size_t blocks = c.architecture == Architecture::kSecondOrder ? 4 : 2;
  store.add_param("projection/weights",
                  rng.normal_tensor({pooled_width(c), c.hidden}, 1.0 / std::sqrt(static_cast<double>(blocks))));
  store.add_param("projection/bias", Tensor::zeros({c.hidden}));
  layers::init_context_gating(store, "gating", c.hidden, rng);
  init_moe(store, "moe", c.hidden, c.experts, c.labels, rng);
  return store;
}

Var pool(Binder& binder, const ModelConfig& config, Var frames) {
  config.validate();
  return pool_as(binder, config, config.architecture, as_batch(config, frames).frames);
}

Var forward(Binder& binder, const ModelConfig& config, Var frames) {
  return run(binder, config, config.architecture, frames);
}

Var forward_baseline(Binder& binder, const ModelConfig& config, Var frames) {
  return run(binder, config, Architecture::kBaselineNetVlad, frames);
}

Var forward_attention_enhanced(Binder& binder, const ModelConfig& config, Var frames) {
  return run(binder, config, Architecture::kAttentionEnhanced, frames);
}

Var forward_attention_netvlad(Binder& binder, const ModelConfig& config, Var frames) {
  return run(binder, config, Architecture::kAttentionNetVlad, frames);
}

Var forward_second_order(Binder& binder, const ModelConfig& config, Var frames) {
  return run(binder, config, Architecture::kSecondOrder, frames);
}

Var classification_loss(Var probs, const Tensor& targets) {
  const double batch = probs.value().rank() >= 2 ? static_cast<double>(probs.dim(0)) : 1.0;
  return scale(binary_cross_entropy(probs, targets), 1.0 / batch);
}

Tensor predict(ParamStore& params, const ModelConfig& config, const Tensor& frames) {
  Tape tape;
  Binder binder(tape, params, false, false);
  return forward(binder, config, tape.constant(frames)).value();
}

}  // namespace poolforge::models
