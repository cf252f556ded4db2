#pragma once

#include <string>
#include <vector>

#include "poolforge/layers/params.hpp"
#include "poolforge/random.hpp"

namespace poolforge::layers {

// softmax(Q K^T / sqrt(d)) V for Q [..., Nq, d], K and V [..., Nk, d].
Var scaled_dot_attention(Var q, Var k, Var v);

struct TransformerConfig {
  std::size_t width = 0;
  std::size_t heads = 1;
  // Feed-forward inner width; 0 means 2 * width.
  std::size_t ff_hidden = 0;
  // Output width of the final feed-forward layer; 0 means width. Only the
  // starred encoder may use a different value.
  std::size_t out_width = 0;
  // Batch normalization of the per-head query/key/value projections.
  bool inner_batch_norm = true;

  std::size_t ff_width() const { return ff_hidden ? ff_hidden : 2 * width; }
  std::size_t output_width() const { return out_width ? out_width : width; }
  void validate() const;
};

struct BatchNormSite {
  Var gamma;
  Var beta;
  NormState state;
};

struct MultiHeadParams {
  Var wq;  // [F, F]
  Var wk;
  Var wv;
  Var wo;  // [F, F]
  Var bo;  // [F]
  std::size_t heads = 1;
  // Empty, or one site each for query, key and value.
  std::vector<BatchNormSite> inner_norm;
};

struct FeedForwardParams {
  Var w1;  // [F, hidden]
  Var b1;
  Var w2;  // [hidden, out]
  Var b2;
};

struct TransformerParams {
  MultiHeadParams attention;
  FeedForwardParams feed_forward;
};

void init_transformer(ParamStore& store, const std::string& prefix, const TransformerConfig& config, Rng& rng);
TransformerParams bind_transformer(Binder& binder, const std::string& prefix, const TransformerConfig& config);

// X [..., N, F] -> [..., N, F]. `bn.training` selects batch or running
// statistics for the inner normalization.
Var multi_head_attention(Var x, const MultiHeadParams& params, const BatchNormOptions& bn);

Var feed_forward(Var x, const FeedForwardParams& params);

// h = X + MHA(X); out = h + FF(h). No positional encoding, so the block is
// equivariant under row permutations.
Var transformer_encoder(Var x, const TransformerParams& params, const BatchNormOptions& bn);

// As transformer_encoder but the feed-forward projects to the configured
// output width and the final residual is dropped: out = FF(X + MHA(X)).
Var transformer_encoder_star(Var x, const TransformerParams& params, const BatchNormOptions& bn);

}  // namespace poolforge::layers
