#include <gtest/gtest.h>

#include <cmath>

#include "poolforge/error.hpp"
#include "poolforge/grad_check.hpp"
#include "poolforge/layers/attention.hpp"
#include "poolforge/layers/attention_cluster.hpp"
#include "poolforge/layers/context_gating.hpp"
#include "poolforge/layers/netvlad.hpp"
#include "poolforge/layers/second_order.hpp"
#include "poolforge/layers/t_embed.hpp"
#include "poolforge/ops.hpp"
#include "support/oracles.hpp"

using namespace poolforge;
using namespace poolforge::layers;
using oracle::max_abs_diff;

namespace {

constexpr int kSeeds = 20;

GradCheckReport check(const TapeFunction& f, const std::vector<Tensor>& inputs, double tol = 1e-4) {
  GradCheckOptions o = GradCheckOptions::composite();
  o.tolerance = tol;
  return grad_check(f, inputs, o);
}

// Rows of x in the order given by perm.
Tensor permute_rows(const Tensor& x, const std::vector<std::size_t>& perm) {
  const std::size_t f = x.dim(-1);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < perm.size(); ++i)
    for (std::size_t q = 0; q < f; ++q) out.mutable_data()[i * f + q] = x[perm[i] * f + q];
  return out;
}

// Fixed weights so the projected outputs are a stable contraction.
Tensor weights_for(const Tensor& x, std::uint64_t seed) { return oracle::random(x.shape(), seed); }

struct Encoder {
  ParamStore store;
  TransformerConfig config;

  Encoder(std::size_t width, std::size_t heads, std::uint64_t seed, std::size_t out_width = 0, bool bn = true) {
    config.width = width;
    config.heads = heads;
    config.out_width = out_width;
    config.inner_batch_norm = bn;
    Rng rng(seed);
    init_transformer(store, "enc", config, rng);
  }
};

}  // namespace

// ---------------------------------------------------------------- attention cluster

TEST(AttentionCluster, SingleDescriptorIsItsUnitVector) {
  ParamStore store;
  Rng rng(3);
  init_attention_cluster(store, "ac", AttentionClusterConfig{5, 3}, rng);
  const Tensor x = oracle::random({1, 5}, 4);
  Tape t;
  Binder b(t, store, false, false);
  const Tensor y = attention_cluster(t.constant(x), bind_attention_cluster(b, "ac")).value();
  double norm = 0;
  for (double v : x.data()) norm += v * v;
  norm = std::sqrt(norm);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t q = 0; q < 5; ++q) EXPECT_NEAR(y[k * 5 + q], x[q] / norm, 1e-15);
}

TEST(AttentionCluster, BlockNormIsInverseSqrtN) {
  for (int seed = 0; seed < 100; ++seed) {
    const std::size_t n = 1 + seed % 8, f = 2 + seed % 5, k = 1 + seed % 4;
    ParamStore store;
    Rng rng(seed);
    init_attention_cluster(store, "ac", AttentionClusterConfig{f, k, 0, seed % 2 == 1}, rng);
    store.mutable_param("ac/alpha") = rng.normal_tensor(store.param("ac/alpha").shape(), 2.0);
    store.mutable_param("ac/beta") = rng.normal_tensor(store.param("ac/beta").shape(), 2.0);
    Tape t;
    Binder b(t, store, false, false);
    const Tensor y = attention_cluster(t.constant(rng.normal_tensor({n, f}, 3.0)), bind_attention_cluster(b, "ac")).value();
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0;
      for (std::size_t q = 0; q < f; ++q) s += y[c * f + q] * y[c * f + q];
      EXPECT_NEAR(std::sqrt(s), 1.0 / std::sqrt(static_cast<double>(n)), 1e-10);
    }
  }
}

TEST(AttentionCluster, PositiveRescalingOfShiftLeavesOutput) {
  ParamStore store;
  Rng rng(8);
  init_attention_cluster(store, "ac", AttentionClusterConfig{4, 3, 0, true}, rng);
  store.mutable_param("ac/beta") = rng.normal_tensor(store.param("ac/beta").shape(), 1.0);
  const Tensor x = rng.normal_tensor({6, 4}, 1.0);
  auto run = [&](double c) {
    ParamStore s = store;
    for (double& v : s.mutable_param("ac/alpha").mutable_data()) v *= c;
    for (double& v : s.mutable_param("ac/beta").mutable_data()) v *= c;
    Tape t;
    Binder b(t, s, false, false);
    return attention_cluster(t.constant(x), bind_attention_cluster(b, "ac")).value();
  };
  EXPECT_LT(max_abs_diff(run(1.0), run(7.5)), 1e-12);
}

TEST(AttentionCluster, PermutationInvariant) {
  ParamStore store;
  Rng rng(9);
  init_attention_cluster(store, "ac", AttentionClusterConfig{4, 2}, rng);
  const Tensor x = rng.normal_tensor({7, 4}, 1.0);
  auto run = [&](const Tensor& in) {
    Tape t;
    Binder b(t, store, false, false);
    return attention_cluster(t.constant(in), bind_attention_cluster(b, "ac")).value();
  };
  for (int i = 0; i < 10; ++i) EXPECT_LT(max_abs_diff(run(x), run(permute_rows(x, rng.permutation(7)))), 1e-12);
}

TEST(AttentionCluster, GradientCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    ParamStore store;
    Rng rng(seed);
    init_attention_cluster(store, "ac", AttentionClusterConfig{4, 2, 3, seed % 2 == 0}, rng);
    std::vector<Tensor> in{rng.normal_tensor({5, 4}, 1.0)};
    for (const char* n : {"w1", "b1", "w2", "b2", "alpha", "beta"}) in.push_back(store.param(std::string("ac/") + n));
    in[6] = rng.normal_tensor(in[6].shape(), 0.5);
    const Tensor w = rng.normal_tensor({8}, 1.0);
    auto f = [&](Tape& t, std::span<const Var> v) {
      AttentionClusterParams p{v[1], v[2], v[3], v[4], v[5], v[6]};
      return sum(attention_cluster(v[0], p) * t.constant(w));
    };
    const auto r = check(f, in);
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.summary();
  }
}

// ---------------------------------------------------------------- attention

TEST(ScaledDotAttention, SingleRowReturnsValue) {
  Tape t;
  const Tensor v = oracle::random({1, 3}, 2);
  const Tensor y =
      scaled_dot_attention(t.constant(oracle::random({1, 3}, 1)), t.constant(oracle::random({1, 3}, 3)), t.constant(v))
          .value();
  EXPECT_TRUE(y.same_values(v));
}

TEST(ScaledDotAttention, OrthogonalQueriesAverageValues) {
  Tape t;
  const Tensor q = Tensor::matrix({{1, 0}, {2, 0}});
  const Tensor k = Tensor::matrix({{0, 1}, {0, 1}, {0, 1}});
  const Tensor v = Tensor::matrix({{1, 2}, {3, 4}, {5, 9}});
  const Tensor y = scaled_dot_attention(t.constant(q), t.constant(k), t.constant(v)).value();
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_NEAR(y.at({r, 0}), 3.0, 1e-15);
    EXPECT_NEAR(y.at({r, 1}), 5.0, 1e-15);
  }
}

TEST(ScaledDotAttention, MatchesDirectEvaluation) {
  const Tensor q = oracle::random({3, 4}, 1), k = oracle::random({3, 4}, 2), v = oracle::random({3, 4}, 3);
  Tape t;
  const Tensor y = scaled_dot_attention(t.constant(q), t.constant(k), t.constant(v)).value();
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> s(3);
    for (std::size_t j = 0; j < 3; ++j) {
      long double d = 0;
      for (std::size_t c = 0; c < 4; ++c) d += static_cast<long double>(q.at({i, c})) * k.at({j, c});
      s[j] = static_cast<double>(d / 2.0L);
    }
    const auto a = oracle::softmax(s);
    for (std::size_t c = 0; c < 4; ++c) {
      long double o = 0;
      for (std::size_t j = 0; j < 3; ++j) o += static_cast<long double>(a[j]) * v.at({j, c});
      EXPECT_NEAR(y.at({i, c}), static_cast<double>(o), 1e-10);
    }
  }
}

TEST(MultiHeadAttention, SingleHeadIdentityProjectionsIsPlainAttention) {
  Tape t;
  const Tensor x = oracle::random({5, 4}, 1);
  Tensor eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye.mutable_data()[i * 5] = 1;
  MultiHeadParams p{t.constant(eye), t.constant(eye), t.constant(eye), t.constant(eye), t.constant(Tensor::zeros({4})), 1, {}};
  const Var xv = t.constant(x);
  EXPECT_LT(max_abs_diff(multi_head_attention(xv, p, {}).value(), scaled_dot_attention(xv, xv, xv).value()), 1e-15);
}

TEST(MultiHeadAttention, ZeroOutputProjectionGivesZeros) {
  Encoder e(8, 2, 1);
  e.store.mutable_param("enc/attention/wo") = Tensor::zeros({8, 8});
  Tape t;
  Binder b(t, e.store, true);
  const auto p = bind_transformer(b, "enc", e.config);
  const Tensor y = multi_head_attention(t.constant(oracle::random({6, 8}, 2, 5.0)), p.attention, {}).value();
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(MultiHeadAttention, RejectsIndivisibleHeads) {
  TransformerConfig c;
  c.width = 6;
  c.heads = 4;
  EXPECT_THROW(c.validate(), ConfigError);
}

namespace {

// Grad check of an encoder-type function over x and every encoder parameter.
// Batch-norm statistics are fresh on each evaluation.
template <typename Fn>
GradCheckReport check_encoder(const Encoder& e, const Tensor& x, std::size_t out_width, Fn fn) {
  std::vector<std::string> names;
  std::vector<Tensor> in{x};
  for (const auto& [n, v] : e.store.params()) {
    names.push_back(n);
    in.push_back(v);
  }
  Shape ws = x.shape();
  ws.back() = out_width;
  const Tensor w = oracle::random(ws, 77);
  auto f = [&](Tape& t, std::span<const Var> v) {
    ParamStore s = e.store;
    Binder b(t, s, true);
    for (std::size_t i = 0; i < names.size(); ++i) b.bind(names[i], v[i + 1]);
    return sum(fn(v[0], bind_transformer(b, "enc", e.config)) * t.constant(w));
  };
  return check(f, in);
}

}  // namespace

TEST(MultiHeadAttention, GradientCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Encoder e(8, 2, seed);
    const auto r = check_encoder(e, oracle::random({4, 8}, seed + 1000), 8,
                                 [](Var x, const TransformerParams& p) { return multi_head_attention(x, p.attention, {}); });
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.summary();
  }
}

TEST(TransformerEncoder, ShapePreservedAndRowEquivariant) {
  Rng rng(5);
  for (std::size_t n : {2, 3, 7}) {
    Encoder e(8, 4, n);
    const Tensor x = rng.normal_tensor({n, 8}, 1.0);
    auto run = [&](const Tensor& in) {
      ParamStore s = e.store;
      Tape t;
      Binder b(t, s, true);
      return transformer_encoder(t.constant(in), bind_transformer(b, "enc", e.config), {}).value();
    };
    const Tensor y = run(x);
    EXPECT_EQ(y.shape(), x.shape());
    for (int i = 0; i < 5; ++i) {
      const auto perm = rng.permutation(n);
      EXPECT_LT(max_abs_diff(run(permute_rows(x, perm)), permute_rows(y, perm)), 1e-10);
    }
  }
}

TEST(TransformerEncoder, GradientCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Encoder e(8, 2, seed);
    const auto r = check_encoder(e, oracle::random({3, 8}, seed + 2000), 8,
                                 [](Var x, const TransformerParams& p) { return transformer_encoder(x, p, {}); });
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.summary();
  }
}

TEST(TransformerEncoderStar, OutputShapeIsClusterCount) {
  Encoder e(8, 2, 1, 4);
  Tape t;
  Binder b(t, e.store, true);
  EXPECT_EQ(transformer_encoder_star(t.constant(oracle::random({5, 8}, 1)), bind_transformer(b, "enc", e.config), {}).shape(),
            (Shape{5, 4}));
}

TEST(TransformerEncoderStar, DiffersFromEncoderByTheResidual) {
  Encoder e(8, 2, 3, 8);
  const Tensor x = oracle::random({5, 8}, 4);
  Tape t;
  ParamStore s = e.store;
  Binder b(t, s, false);
  const auto p = bind_transformer(b, "enc", e.config);
  const Var xv = t.constant(x);
  const Tensor full = transformer_encoder(xv, p, {false}).value();
  const Tensor star = transformer_encoder_star(xv, p, {false}).value();
  const Tensor h = (xv + multi_head_attention(xv, p.attention, {false})).value();
  for (std::size_t i = 0; i < full.size(); ++i) EXPECT_NEAR(full[i] - star[i], h[i], 1e-12);
}

TEST(TransformerEncoderStar, GradientCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Encoder e(8, 2, seed, 4);
    const auto r = check_encoder(e, oracle::random({3, 8}, seed + 3000), 4,
                                 [](Var x, const TransformerParams& p) { return transformer_encoder_star(x, p, {}); });
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.summary();
  }
}

// ---------------------------------------------------------------- netvlad

TEST(NetVlad, SingleClusterUnitAssignmentSumsFrames) {
  Tape t;
  const Tensor x = oracle::random({4, 3}, 1);
  NetVladParams p{t.constant(Tensor::zeros({1, 3})), std::nullopt, std::nullopt};
  const Tensor y = netvlad(t.constant(x), p, t.constant(Tensor::full({4, 1}, 1.0))).value();
  for (std::size_t q = 0; q < 3; ++q) {
    double s = 0;
    for (std::size_t i = 0; i < 4; ++i) s += x.at({i, q});
    EXPECT_NEAR(y[q], s, 1e-15);
  }
}

TEST(NetVlad, SingleFrameHandComputation) {
  Tape t;
  const Tensor x = Tensor::matrix({{1, 2}});
  const Tensor keys = Tensor::matrix({{1, 0}, {0, 1}});
  const Tensor centers = Tensor::matrix({{0, 0}, {1, 1}});
  NetVladParams p{t.constant(centers), t.constant(keys), t.constant(Tensor::zeros({2}))};
  const Tensor y = netvlad(t.constant(x), p).value();
  const double a0 = std::exp(1.0) / (std::exp(1.0) + std::exp(2.0)), a1 = 1 - a0;
  const std::vector<double> want{a0 * 1, a0 * 2, a1 * 0, a1 * 1};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(y[i], want[i], 1e-15);
}

TEST(NetVlad, HardAssignmentLimit) {
  Rng rng(31);
  int compared = 0;
  while (compared < 20) {
    const Tensor x = rng.normal_tensor({8, 4}, 1.0), keys = rng.normal_tensor({4, 3}, 1.0);
    const Tensor bias = rng.normal_tensor({3}, 0.1), centers = rng.normal_tensor({3, 4}, 1.0);
    if (oracle::assignment_margin(x, keys, bias) < 5e-3) continue;
    Tape t;
    NetVladParams p{t.constant(centers), t.constant(keys), t.constant(bias)};
    EXPECT_LT(max_abs_diff(netvlad(t.constant(x), p, std::nullopt, 1e4).value(), oracle::hard_vlad(x, keys, bias, centers)),
              1e-6);
    ++compared;
  }
}

TEST(NetVlad, RejectsSimilaritiesThatAreNotDistributions) {
  Tape t;
  NetVladParams p{t.constant(Tensor::zeros({2, 3})), std::nullopt, std::nullopt};
  const Var x = t.constant(oracle::random({4, 3}, 1));
  EXPECT_THROW(netvlad(x, p, t.constant(Tensor::full({4, 2}, 0.6))), ContractError);
  EXPECT_THROW(netvlad(x, p, t.constant(Tensor::full({4, 3}, 1.0 / 3))), DimensionError);
  EXPECT_THROW(netvlad(x, p), ConfigError);
}

TEST(NetVlad, PermutationInvariant) {
  Rng rng(4);
  const Tensor x = rng.normal_tensor({6, 5}, 1.0);
  ParamStore store;
  init_netvlad(store, "nv", NetVladConfig{5, 3}, rng);
  auto run = [&](const Tensor& in) {
    Tape t;
    Binder b(t, store, false, false);
    return netvlad(t.constant(in), bind_netvlad(b, "nv", NetVladConfig{5, 3})).value();
  };
  for (int i = 0; i < 10; ++i) EXPECT_LT(max_abs_diff(run(x), run(permute_rows(x, rng.permutation(6)))), 1e-12);
}

TEST(NetVlad, GradientCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const std::size_t n = 2 + seed % 7, f = 2 + seed % 6, c = 1 + seed % 4;
    std::vector<Tensor> in{rng.normal_tensor({2, n, f}, 1.0), rng.normal_tensor({c, f}, 1.0),
                           rng.normal_tensor({f, c}, 1.0), rng.normal_tensor({c}, 0.5)};
    const Tensor w = rng.normal_tensor({2, c, f}, 1.0);
    auto fn = [&](Tape& t, std::span<const Var> v) {
      return sum(netvlad(v[0], NetVladParams{v[1], v[2], v[3]}, std::nullopt, 1.5) * t.constant(w));
    };
    const auto r = check(fn, in);
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.summary();
  }
}

TEST(NetVlad, ExternalSimilaritiesGradientCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed + 500);
    std::vector<Tensor> in{rng.normal_tensor({5, 4}, 1.0), rng.normal_tensor({3, 4}, 1.0), rng.normal_tensor({5, 3}, 1.0)};
    const Tensor w = rng.normal_tensor({3, 4}, 1.0);
    auto fn = [&](Tape& t, std::span<const Var> v) {
      return sum(netvlad(v[0], NetVladParams{v[1], std::nullopt, std::nullopt}, softmax(v[2], -1)) * t.constant(w));
    };
    const auto r = check(fn, in);
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.summary();
  }
}

// ---------------------------------------------------------------- t-embedding

TEST(TEmbed, UnwhitenedBlocksHaveUnitNorm) {
  Tape t;
  const Tensor y = t_embed(t.constant(oracle::random({5, 4}, 1)), t.constant(oracle::random({3, 4}, 2)), nullptr, false).value();
  ASSERT_EQ(y.shape(), (Shape{5, 12}));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 3; ++k) {
      double s = 0;
      for (std::size_t q = 0; q < 4; ++q) s += y[i * 12 + k * 4 + q] * y[i * 12 + k * 4 + q];
      EXPECT_NEAR(std::sqrt(s), 1.0, 1e-10);
    }
}

TEST(TEmbed, IdentityWhiteningMatchesUnwhitened) {
  Tensor mean = Tensor::zeros({8}), var = Tensor::full({8}, 1.0);
  WhiteningState w{mean, var};
  Tape t;
  const Var x = t.constant(oracle::random({3, 4}, 1)), c = t.constant(oracle::random({2, 4}, 2));
  EXPECT_LT(max_abs_diff(t_embed(x, c, &w, false).value(), t_embed(x, c, nullptr, false).value()), 1e-15);
}

TEST(TEmbed, RunningWhiteningReachesUnitVariance) {
  Tensor mean = Tensor::zeros({6}), var = Tensor::full({6}, 1.0);
  WhiteningState w{mean, var};
  const Tensor x = oracle::random({10, 3}, 5), c = oracle::random({2, 3}, 6);
  for (int i = 0; i < 3000; ++i) {
    Tape t;
    t_embed(t.constant(x), t.constant(c), &w, true);
  }
  Tape t;
  const Tensor y = t_embed(t.constant(x), t.constant(c), &w, false).value();
  for (std::size_t j = 0; j < 6; ++j) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 10; ++i) m += y[i * 6 + j] / 10;
    for (std::size_t i = 0; i < 10; ++i) v += (y[i * 6 + j] - m) * (y[i * 6 + j] - m) / 10;
    EXPECT_NEAR(v, 1.0, 0.1) << "coordinate " << j;
  }
}

TEST(TEmbed, SingleCenterAtOriginIsWhitenedDirection) {
  Tensor mean = Tensor::vector({0.1, -0.3, 0.2}), var = Tensor::vector({0.5, 2.0, 1.5});
  WhiteningState w{mean, var};
  const Tensor x = oracle::random({4, 3}, 9);
  Tape t;
  const Tensor y = t_embed(t.constant(x), t.constant(Tensor::zeros({1, 3})), &w, false).value();
  for (std::size_t i = 0; i < 4; ++i) {
    const double n = std::sqrt(x[i * 3] * x[i * 3] + x[i * 3 + 1] * x[i * 3 + 1] + x[i * 3 + 2] * x[i * 3 + 2]);
    for (std::size_t q = 0; q < 3; ++q) EXPECT_NEAR(y[i * 3 + q], (x[i * 3 + q] / n - mean[q]) / std::sqrt(var[q]), 1e-14);
  }
}

TEST(TEmbed, SummedOutputPermutationInvariant) {
  Rng rng(12);
  const Tensor x = rng.normal_tensor({7, 4}, 1.0), c = rng.normal_tensor({3, 4}, 1.0);
  Tensor mean = rng.normal_tensor({12}, 0.1), var = rng.uniform_tensor({12}, 0.5, 2.0);
  WhiteningState w{mean, var};
  auto run = [&](const Tensor& in) {
    Tape t;
    return reduce_sum(t_embed(t.constant(in), t.constant(c), &w, false), 0).value();
  };
  for (int i = 0; i < 10; ++i) EXPECT_LT(max_abs_diff(run(x), run(permute_rows(x, rng.permutation(7)))), 1e-10);
}

TEST(TEmbed, GradientCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const Tensor mean0 = rng.normal_tensor({8}, 0.1), var0 = rng.uniform_tensor({8}, 0.5, 2.0);
    const Tensor w = rng.normal_tensor({2, 5, 8}, 1.0);
    auto fn = [&](Tape& t, std::span<const Var> v) {
      Tensor mean = mean0, var = var0;
      WhiteningState white{mean, var};
      return sum(t_embed(v[0], v[1], &white, true) * t.constant(w));
    };
    const auto r = check(fn, {rng.normal_tensor({2, 5, 4}, 1.0), rng.normal_tensor({2, 4}, 1.0)});
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.summary();
  }
}

// ---------------------------------------------------------------- second order

TEST(SecondOrder, WidthIdentity) {
  for (std::size_t f = 2; f <= 9; ++f)
    for (std::size_t p = 1; p < f; p += 2)
      for (std::size_t c = 1; c <= 4; ++c) {
        const SecondOrderConfig cfg{f, p, c};
        Rng rng(f * 100 + p * 10 + c);
        ParamStore store;
        init_netvlad(store, "nv", NetVladConfig{f, c}, rng);
        init_second_order(store, "so", cfg, rng);
        Tape t;
        Binder b(t, store, false, false);
        const auto params = bind_second_order(b, "so", bind_netvlad(b, "nv", NetVladConfig{f, c}));
        const Var y = second_order_embed(t.constant(rng.normal_tensor({3, f}, 1.0)), params);
        EXPECT_EQ(y.shape(), (Shape{3, cfg.embed_width()}));
        EXPECT_EQ(cfg.embed_width(), c * (1 + f + p * p));
      }
  EXPECT_THROW((SecondOrderConfig{4, 4, 2}.validate()), ConfigError);
}

namespace {

struct SecondOrderFixture {
  Tensor x, centers, keys, bias, projection, centers2, keys2, bias2;

  explicit SecondOrderFixture(std::uint64_t seed, std::size_t n = 4, std::size_t f = 5, std::size_t p = 3, std::size_t c = 2) {
    Rng rng(seed);
    x = rng.normal_tensor({n, f}, 1.0);
    centers = rng.normal_tensor({c, f}, 1.0);
    keys = rng.normal_tensor({f, c}, 1.0);
    bias = rng.normal_tensor({c}, 0.5);
    projection = rng.normal_tensor({f, p}, 0.5);
    centers2 = rng.normal_tensor({c, p}, 1.0);
    keys2 = rng.normal_tensor({p, c}, 1.0);
    bias2 = rng.normal_tensor({c}, 0.5);
  }

  Tensor run() const {
    Tape t;
    SecondOrderParams sp{t.constant(projection), t.constant(centers2), t.constant(keys2), t.constant(bias2),
                         NetVladParams{t.constant(centers), t.constant(keys), t.constant(bias)}};
    return second_order_embed(t.constant(x), sp).value();
  }
};

}  // namespace

TEST(SecondOrder, DescriptorAtCenterGivesOnlyAssignment) {
  SecondOrderFixture s(3);
  const std::size_t f = 5, p = 3, width = 1 + f + p * p;
  // Put cluster 1 of both blocks exactly on frame 2.
  for (std::size_t q = 0; q < f; ++q) s.centers.mutable_data()[f + q] = s.x.at({2, q});
  Tape t;
  const Tensor px = matmul(t.constant(s.x), t.constant(s.projection)).value();
  for (std::size_t q = 0; q < p; ++q) s.centers2.mutable_data()[p + q] = px.at({2, q});
  const Tensor y = s.run();
  const std::size_t base = 2 * 2 * width + width;
  EXPECT_GT(y[base], 0.0);
  for (std::size_t q = 1; q < width; ++q) EXPECT_EQ(y[base + q], 0.0) << q;
}

TEST(SecondOrder, OuterProductBlockMatchesDoubleLoop) {
  for (int seed = 0; seed < 10; ++seed) {
    SecondOrderFixture s(seed);
    const std::size_t n = 4, f = 5, p = 3, c = 2, width = 1 + f + p * p;
    const Tensor y = s.run();
    const Tensor px = oracle::matmul(s.x, s.projection);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> logits(c);
      for (std::size_t j = 0; j < c; ++j) {
        logits[j] = s.bias2[j];
        for (std::size_t q = 0; q < p; ++q) logits[j] += px.at({i, q}) * s.keys2.at({q, j});
      }
      const auto a2 = oracle::softmax(logits);
      for (std::size_t j = 0; j < c; ++j)
        for (std::size_t r = 0; r < p; ++r)
          for (std::size_t q = 0; q < p; ++q) {
            const double vr = px.at({i, r}) - s.centers2.at({j, r});
            const double vq = px.at({i, q}) - s.centers2.at({j, q});
            EXPECT_NEAR(y[(i * c + j) * width + 1 + f + r * p + q], a2[j] * vr * vq, 1e-12);
          }
    }
  }
}

TEST(SecondOrder, GradientCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    SecondOrderFixture s(seed + 100, 3, 4, 2, 2);
    const Tensor w = oracle::random({3, 2 * (1 + 4 + 4)}, seed);
    auto fn = [&](Tape& t, std::span<const Var> v) {
      SecondOrderParams sp{v[4], v[5], v[6], v[7], NetVladParams{v[1], v[2], v[3]}};
      return sum(second_order_embed(v[0], sp, 1.3) * t.constant(w));
    };
    const auto r = check(fn, {s.x, s.centers, s.keys, s.bias, s.projection, s.centers2, s.keys2, s.bias2});
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.summary();
  }
}

// ---------------------------------------------------------------- context gating

TEST(ContextGating, ZeroWeightsHalveInput) {
  Tape t;
  const Tensor x = oracle::random({6}, 1);
  const Tensor y =
      context_gating(t.constant(x), ContextGatingParams{t.constant(Tensor({6, 6})), t.constant(Tensor({6}))}).value();
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(y[i], 0.5 * x[i]);
}

TEST(ContextGating, SaturatedGatePassesInput) {
  Tape t;
  const Tensor x = oracle::random({2, 6}, 1);
  const Tensor y = context_gating(t.constant(x), ContextGatingParams{t.constant(oracle::random({6, 6}, 2, 0.1)),
                                                                      t.constant(Tensor::full({6}, 30.0))})
                       .value();
  EXPECT_LT(max_abs_diff(y, x), 1e-9);
}

TEST(ContextGating, GradientCheck) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(seed);
    const Tensor w = rng.normal_tensor({6}, 1.0);
    auto fn = [&](Tape& t, std::span<const Var> v) {
      return sum(context_gating(v[0], ContextGatingParams{v[1], v[2]}) * t.constant(w));
    };
    const auto r = check(fn, {rng.normal_tensor({6}, 1.0), rng.normal_tensor({6, 6}, 0.5), rng.normal_tensor({6}, 0.5)}, 1e-6);
    EXPECT_TRUE(r.passed) << "seed " << seed << ": " << r.summary();
  }
}
