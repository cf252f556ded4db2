#include "poolforge/layers/attention.hpp"

#include <cmath>

#include "poolforge/error.hpp"

namespace poolforge::layers {

Var scaled_dot_attention(Var q, Var k, Var v) {
  const Shape& qs = q.shape();
  const Shape& ks = k.shape();
  const Shape& vs = v.shape();
  if (qs.size() < 2 || ks.size() < 2 || vs.size() < 2 || qs.back() != ks.back() ||
      ks[ks.size() - 2] != vs[vs.size() - 2])
    throw DimensionError("scaled_dot_attention: incompatible shapes Q" + shape_string(qs) + " K" + shape_string(ks) +
                         " V" + shape_string(vs));
  const double alpha = std::sqrt(static_cast<double>(qs.back()));
  const Var scores = scale(matmul(q, transpose(k)), 1.0 / alpha);
  return matmul(softmax(scores, -1), v);
}

void TransformerConfig::validate() const {
  if (width == 0 || heads == 0) throw ConfigError("transformer: width and heads must be positive");
  if (width % heads != 0)
    throw ConfigError("transformer: width " + std::to_string(width) + " not divisible by " + std::to_string(heads) +
                      " heads");
}

void init_transformer(ParamStore& store, const std::string& prefix, const TransformerConfig& config, Rng& rng) {
  config.validate();
  const std::size_t f = config.width;
  const std::size_t hidden = config.ff_width();
  const std::size_t out = config.output_width();
  const double s = 1.0 / std::sqrt(static_cast<double>(f));
  store.add_param(join(prefix, "attention/wq"), rng.normal_tensor({f, f}, s));
  store.add_param(join(prefix, "attention/wk"), rng.normal_tensor({f, f}, s));
  store.add_param(join(prefix, "attention/wv"), rng.normal_tensor({f, f}, s));
  store.add_param(join(prefix, "attention/wo"), rng.normal_tensor({f, f}, s));
  store.add_param(join(prefix, "attention/bo"), Tensor::zeros({f}));
  if (config.inner_batch_norm) {
    for (const char* site : {"bn_q", "bn_k", "bn_v"}) {
      const std::string p = join(prefix, std::string("attention/") + site);
      store.add_param(join(p, "gamma"), Tensor::full({f}, 1.0));
      store.add_param(join(p, "beta"), Tensor::zeros({f}));
      add_norm_state(store, p, f);
    }
  }
  store.add_param(join(prefix, "ff/w1"), rng.normal_tensor({f, hidden}, std::sqrt(2.0 / static_cast<double>(f))));
  store.add_param(join(prefix, "ff/b1"), Tensor::zeros({hidden}));
  store.add_param(join(prefix, "ff/w2"), rng.normal_tensor({hidden, out}, 1.0 / std::sqrt(static_cast<double>(hidden))));
  store.add_param(join(prefix, "ff/b2"), Tensor::zeros({out}));
}

TransformerParams bind_transformer(Binder& binder, const std::string& prefix, const TransformerConfig& config) {
  config.validate();
  TransformerParams p;
  MultiHeadParams& a = p.attention;
  a.wq = binder.param(join(prefix, "attention/wq"));
  a.wk = binder.param(join(prefix, "attention/wk"));
  a.wv = binder.param(join(prefix, "attention/wv"));
  a.wo = binder.param(join(prefix, "attention/wo"));
  a.bo = binder.param(join(prefix, "attention/bo"));
  a.heads = config.heads;
  if (config.inner_batch_norm) {
    for (const char* site : {"bn_q", "bn_k", "bn_v"}) {
      const std::string s = join(prefix, std::string("attention/") + site);
      a.inner_norm.push_back(
          BatchNormSite{binder.param(join(s, "gamma")), binder.param(join(s, "beta")), binder.norm_state(s)});
    }
  }
  p.feed_forward = FeedForwardParams{binder.param(join(prefix, "ff/w1")), binder.param(join(prefix, "ff/b1")),
                                     binder.param(join(prefix, "ff/w2")), binder.param(join(prefix, "ff/b2"))};
  return p;
}

Var multi_head_attention(Var x, const MultiHeadParams& params, const BatchNormOptions& bn) {
  const std::size_t f = x.dim(-1);
  if (params.wq.dim(0) != f)
    throw DimensionError("multi_head_attention: input width " + std::to_string(f) + " vs configured " +
                         std::to_string(params.wq.dim(0)));
  if (params.heads == 0 || f % params.heads != 0)
    throw ConfigError("multi_head_attention: width " + std::to_string(f) + " not divisible by " +
                      std::to_string(params.heads) + " heads");
  Var q = matmul(x, params.wq);
  Var k = matmul(x, params.wk);
  Var v = matmul(x, params.wv);
  if (!params.inner_norm.empty()) {
    const auto& n = params.inner_norm;
    q = batch_norm(q, n[0].gamma, n[0].beta, n[0].state, bn);
    k = batch_norm(k, n[1].gamma, n[1].beta, n[1].state, bn);
    v = batch_norm(v, n[2].gamma, n[2].beta, n[2].state, bn);
  }
  const std::size_t dk = f / params.heads;
  Var merged;
  if (params.heads == 1) {
    merged = scaled_dot_attention(q, k, v);
  } else {
    std::vector<Var> heads;
    heads.reserve(params.heads);
    for (std::size_t h = 0; h < params.heads; ++h)
      heads.push_back(scaled_dot_attention(slice(q, -1, h * dk, dk), slice(k, -1, h * dk, dk), slice(v, -1, h * dk, dk)));
    merged = concat(heads, -1);
  }
  return matmul(merged, params.wo) + params.bo;
}

Var feed_forward(Var x, const FeedForwardParams& params) {
  return matmul(relu(matmul(x, params.w1) + params.b1), params.w2) + params.b2;
}

Var transformer_encoder(Var x, const TransformerParams& params, const BatchNormOptions& bn) {
  if (params.feed_forward.w2.dim(-1) != x.dim(-1))
    throw ConfigError("transformer_encoder: feed-forward output width must equal input width");
  const Var h = x + multi_head_attention(x, params.attention, bn);
  return h + feed_forward(h, params.feed_forward);
}

Var transformer_encoder_star(Var x, const TransformerParams& params, const BatchNormOptions& bn) {
  const Var h = x + multi_head_attention(x, params.attention, bn);
  return feed_forward(h, params.feed_forward);
}

}  // namespace poolforge::layers
