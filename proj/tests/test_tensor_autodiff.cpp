#include <gtest/gtest.h>

#include <cmath>

#include "poolforge/autodiff.hpp"
#include "poolforge/error.hpp"
#include "poolforge/grad_check.hpp"
#include "poolforge/layers/netvlad.hpp"
#include "poolforge/ops.hpp"
#include "support/oracles.hpp"

using namespace poolforge;

namespace {

Tensor eval1(Var (*op)(Var), const Tensor& x) {
  Tape t;
  return op(t.constant(x)).value();
}

void expect_values(const Tensor& t, std::vector<double> expected, double tol = 0.0) {
  ASSERT_EQ(t.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(t[i], expected[i], tol) << "at " << i;
}

GradCheckReport check(const TapeFunction& f, std::vector<Tensor> inputs, double tol = 1e-6) {
  GradCheckOptions o;
  o.tolerance = tol;
  return grad_check(f, inputs, o);
}

}  // namespace

TEST(Tensor, ShapeProductMatchesLength) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(shape_size(t.shape()), t.data().size());
  EXPECT_THROW(Tensor({2, 0}), DimensionError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), DimensionError);
}

TEST(Tensor, CopiesDoNotAlias) {
  Tensor a = Tensor::vector({1, 2, 3});
  Tensor b = a;
  b.mutable_data()[0] = 9;
  EXPECT_EQ(a[0], 1);
  EXPECT_EQ(b[0], 9);
}

TEST(Tape, NonFiniteInputsAndResultsAreErrors) {
  Tape t;
  EXPECT_THROW(t.constant(Tensor::vector({1, NAN})), NumericError);
  EXPECT_THROW(t.variable(Tensor::vector({INFINITY})), NumericError);
  EXPECT_THROW(exp(t.constant(Tensor::vector({1000}))), NumericError);
  EXPECT_THROW(log(t.constant(Tensor::vector({-1}))), NumericError);
  EXPECT_THROW(sqrt(t.constant(Tensor::vector({-1}))), NumericError);
  EXPECT_THROW(div(t.constant(Tensor::vector({1})), t.constant(Tensor::vector({0}))), NumericError);
}

TEST(Tape, BackwardRequiresScalarLoss) {
  Tape t;
  Var x = t.variable(Tensor::vector({1, 2}));
  EXPECT_THROW(t.backward(x), ContractError);
}

TEST(Matmul, IdentityAndHandComputation) {
  Tape t;
  expect_values(matmul(t.constant(Tensor::matrix({{1, 0}, {0, 1}})), t.constant(Tensor::matrix({{3, 4}, {5, 6}}))).value(),
                {3, 4, 5, 6});
  expect_values(matmul(t.constant(Tensor::matrix({{1, 2}})), t.constant(Tensor::matrix({{3}, {4}}))).value(), {11});
}

TEST(Matmul, MatchesTripleLoopOnAllSmallShapes) {
  std::uint64_t seed = 1;
  for (std::size_t m = 1; m <= 8; m += 3)
    for (std::size_t k = 1; k <= 8; k += 2)
      for (std::size_t n = 1; n <= 8; n += 3) {
        const Tensor a = oracle::random({m, k}, seed++);
        const Tensor b = oracle::random({k, n}, seed++);
        Tape t;
        const Tensor got = matmul(t.constant(a), t.constant(b)).value();
        const Tensor want = oracle::matmul(a, b);
        for (std::size_t i = 0; i < got.size(); ++i)
          EXPECT_LE(std::abs(got[i] - want[i]), 1e-12 * std::max(1.0, std::abs(want[i])));
      }
}

TEST(Matmul, BatchedBroadcastsLeadingAxes) {
  const Tensor a = oracle::random({2, 3, 4}, 5);
  const Tensor b = oracle::random({1, 4, 2}, 6);
  Tape t;
  const Tensor got = matmul(t.constant(a), t.constant(b)).value();
  ASSERT_EQ(got.shape(), (Shape{2, 3, 2}));
  const Tensor b0 = b.reshaped({4, 2});
  for (std::size_t i = 0; i < 2; ++i) {
    std::vector<double> slice(a.data().begin() + i * 12, a.data().begin() + (i + 1) * 12);
    const Tensor want = oracle::matmul(Tensor({3, 4}, slice), b0);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(got[i * 6 + j], want[j], 1e-12);
  }
  EXPECT_THROW(matmul(t.constant(a), t.constant(oracle::random({3, 2}, 1))), DimensionError);
}

TEST(Softmax, TrivialCases) {
  expect_values(softmax(Tape().constant(Tensor::vector({0, 0, 0})), 0).value(), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
  Tape t;
  expect_values(softmax(t.constant(Tensor::vector({1000, 1000})), 0).value(), {0.5, 0.5}, 0.0);
}

TEST(Softmax, MatchesExtendedPrecision) {
  Tape t;
  const Tensor got = softmax(t.constant(Tensor::vector({1, 2, 3})), 0).value();
  const auto want = oracle::softmax({1, 2, 3});
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(Softmax, RowsSumToOne) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tensor x = oracle::random({3, 4, 5}, seed, 10.0);
    for (int axis = 0; axis < 3; ++axis) {
      Tape t;
      const Tensor y = softmax(t.constant(x), axis).value();
      const Tensor s = reduce_sum(t.constant(y), axis).value();
      for (double v : s.data()) EXPECT_NEAR(v, 1.0, 1e-10);
    }
  }
}

TEST(L2Normalize, TrivialCases) {
  Tape t;
  expect_values(l2_normalize(t.constant(Tensor::vector({3, 4})), 0, 1e-12).value(), {0.6, 0.8}, 1e-15);
  expect_values(l2_normalize(t.constant(Tensor::vector({0, 0})), 0, 1e-12).value(), {0, 0});
}

TEST(L2Normalize, OutputNormIsOne) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Tape t;
    const Tensor y = l2_normalize(t.constant(oracle::random({5}, seed)), 0, 1e-12).value();
    double n = 0;
    for (double v : y.data()) n += v * v;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-12);
  }
}

TEST(Elementwise, HandComputedValues) {
  Tape t;
  expect_values(relu(t.constant(Tensor::vector({-1, 2}))).value(), {0, 2});
  expect_values(sigmoid(t.constant(Tensor::scalar(0))).value(), {0.5});
  expect_values(reduce_sum(t.constant(Tensor::matrix({{1, 2}, {3, 4}})), 0).value(), {4, 6});
  expect_values(reduce_mean(t.constant(Tensor::matrix({{1, 2}, {3, 4}})), 1).value(), {1.5, 3.5});
  expect_values(transpose(t.constant(Tensor::matrix({{1, 2, 3}, {4, 5, 6}}))).value(), {1, 4, 2, 5, 3, 6});
  expect_values(concat({t.constant(Tensor::matrix({{1}, {2}})), t.constant(Tensor::matrix({{3, 4}, {5, 6}}))}, 1).value(),
                {1, 3, 4, 2, 5, 6});
  expect_values(slice(t.constant(Tensor::matrix({{1, 2, 3}, {4, 5, 6}})), 1, 1, 2).value(), {2, 3, 5, 6});
  expect_values(scale(t.constant(Tensor::vector({1, -2})), 3).value(), {3, -6});
  expect_values(sqrt(t.constant(Tensor::vector({4, 9}))).value(), {2, 3});
  expect_values((t.constant(Tensor::matrix({{1, 2}, {3, 4}})) - t.constant(Tensor::vector({1, 1}))).value(), {0, 1, 2, 3});
  expect_values((t.constant(Tensor::matrix({{1}, {2}})) * t.constant(Tensor::vector({1, 10}))).value(), {1, 10, 2, 20});
  EXPECT_EQ(reshape(t.constant(Tensor({2, 3})), {3, 2}).shape(), (Shape{3, 2}));
  EXPECT_THROW(reshape(t.constant(Tensor({2, 3})), {4, 2}), DimensionError);
  EXPECT_THROW(add(t.constant(Tensor({2, 3})), t.constant(Tensor({2}))), DimensionError);
}

TEST(BatchNorm, ZeroVarianceGivesShift) {
  Tensor mean = Tensor::zeros({2}), var = Tensor::full({2}, 1.0);
  Tape t;
  const Tensor x = Tensor::matrix({{3, -1}, {3, -1}, {3, -1}});
  const Tensor y = batch_norm(t.constant(x), t.constant(Tensor::vector({2, 2})), t.constant(Tensor::vector({0.5, -4})),
                              NormState{mean, var}, BatchNormOptions{true, 0.99, 1e-5})
                       .value();
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(y.at({r, 0}), 0.5, 1e-12);
    EXPECT_NEAR(y.at({r, 1}), -4, 1e-12);
  }
}

TEST(BatchNorm, StandardizesTheBatch) {
  Tensor mean = Tensor::zeros({3}), var = Tensor::full({3}, 1.0);
  Tape t;
  const Tensor x = oracle::random({16, 3}, 7, 5.0);
  const Tensor y = batch_norm(t.constant(x), t.constant(Tensor::full({3}, 1.0)), t.constant(Tensor::zeros({3})),
                              NormState{mean, var}, {})
                       .value();
  for (std::size_t c = 0; c < 3; ++c) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < 16; ++r) m += y.at({r, c}) / 16;
    for (std::size_t r = 0; r < 16; ++r) v += (y.at({r, c}) - m) * (y.at({r, c}) - m) / 16;
    EXPECT_NEAR(m, 0.0, 1e-6);
    EXPECT_NEAR(v, 1.0, 1e-4);
  }
}

TEST(BatchNorm, InferenceUsesFrozenRunningStatistics) {
  Tensor mean = Tensor::zeros({2}), var = Tensor::full({2}, 1.0);
  const Tensor x = Tensor::matrix({{1, 10}, {3, 14}});  // batch mean (2, 12), biased var (1, 4)
  for (int i = 0; i < 3000; ++i) {
    Tape t;
    batch_norm(t.constant(x), t.constant(Tensor::full({2}, 1.0)), t.constant(Tensor::zeros({2})), NormState{mean, var},
               {});
  }
  EXPECT_NEAR(mean[0], 2.0, 1e-9);
  EXPECT_NEAR(var[1], 4.0, 1e-9);
  Tape t;
  const Tensor probe = Tensor::matrix({{5, 5}});
  const Tensor y = batch_norm(t.constant(probe), t.constant(Tensor::vector({2, 1})), t.constant(Tensor::vector({1, 0})),
                              NormState{mean, var}, BatchNormOptions{false, 0.99, 1e-5})
                       .value();
  EXPECT_NEAR(y[0], 2 * (5 - mean[0]) / std::sqrt(var[0] + 1e-5) + 1, 1e-12);
  EXPECT_NEAR(y[1], (5 - mean[1]) / std::sqrt(var[1] + 1e-5), 1e-12);
}

TEST(Backward, AnalyticGradients) {
  Tape t;
  const Tensor xv = oracle::random({2, 3}, 3);
  Var x = t.variable(xv);
  t.backward(sum(x));
  for (double g : t.grad(x).data()) EXPECT_EQ(g, 1.0);

  Tape t2;
  Var y = t2.variable(xv);
  t2.backward(sum(y * y));
  for (std::size_t i = 0; i < xv.size(); ++i) EXPECT_DOUBLE_EQ(t2.grad(y)[i], 2 * xv[i]);
}

TEST(Backward, GradientShapesMatchValues) {
  Tape t;
  Var a = t.variable(oracle::random({3, 1, 4}, 1));
  Var b = t.variable(oracle::random({2, 4}, 2));
  Var c = t.variable(oracle::random({4, 5}, 3));
  t.backward(sum(matmul(a + b, c)));
  EXPECT_EQ(t.grad(a).shape(), a.shape());
  EXPECT_EQ(t.grad(b).shape(), b.shape());
  EXPECT_EQ(t.grad(c).shape(), c.shape());
}

TEST(Backward, BitIdenticalAcrossRuns) {
  auto run = [] {
    Tape t;
    Var x = t.variable(oracle::random({4, 6}, 11));
    Var w = t.variable(oracle::random({6, 3}, 12));
    t.backward(sum(softmax(tanh(matmul(x, w)), -1) * t.constant(oracle::random({4, 3}, 13))));
    return std::make_pair(t.grad(x), t.grad(w));
  };
  const auto a = run(), b = run();
  EXPECT_TRUE(a.first.same_values(b.first));
  EXPECT_TRUE(a.second.same_values(b.second));
}

TEST(GradCheck, SumOfSquares) {
  auto f = [](Tape&, std::span<const Var> in) { return sum(in[0] * in[0]); };
  GradCheckOptions o;
  o.step = 1e-5;
  const auto r = grad_check(f, {Tensor::vector({1, 2, 3})}, o);
  EXPECT_LT(r.max_rel_error, 1e-8) << r.summary();
}

TEST(GradCheck, SoftmaxCrossEntropy) {
  const Tensor target = Tensor::matrix({{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}});
  auto f = [&](Tape& t, std::span<const Var> in) {
    return neg(sum(t.constant(target) * log(softmax(in[0], -1))));
  };
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = check(f, {oracle::random({3, 4}, seed, 2.0)});
    EXPECT_TRUE(r.passed) << r.summary();
  }
}

TEST(GradCheck, NetVladWithMeanPooling) {
  auto f = [](Tape&, std::span<const Var> in) {
    layers::NetVladParams p{in[1], in[2], in[3]};
    return mean(layers::netvlad(in[0], p));
  };
  const auto r = check(f, {oracle::random({4, 5}, 1), oracle::random({3, 5}, 2), oracle::random({5, 3}, 3),
                           oracle::random({3}, 4)},
                       1e-4);
  EXPECT_TRUE(r.passed) << r.summary();
}

TEST(GradCheck, DetectsAWrongGradient) {
  // Forward is x^2 but the recorded adjoint claims 3x.
  auto f = [](Tape& t, std::span<const Var> in) {
    const Var x = in[0];
    Tensor y = x.value();
    for (double& v : y.mutable_data()) v *= v;
    Var sq = t.record("bad_square", y, {x}, [xv = x.value()](const Tensor& g, GradSink& sink) {
      Tensor d = g;
      for (std::size_t i = 0; i < d.size(); ++i) d.mutable_data()[i] *= 3 * xv[i];
      sink.add(0, d);
    });
    return sum(sq);
  };
  EXPECT_FALSE(check(f, {Tensor::vector({1, 2})}).passed);
  EXPECT_THROW(grad_check(f, {Tensor::vector({1})}, GradCheckOptions{1.0, 1e-6, 1e-8}), ContractError);
}

// Each op on its own over 20 seeds; batch norm mixes the whole batch and
// gets the composite-layer tolerance.
struct OpCase {
  const char* name;
  std::vector<Shape> shapes;
  TapeFunction f;
  double offset = 0.0;  // added to inputs, keeps log/sqrt/div away from 0
  double tolerance = 1e-6;
};

class OpGradient : public ::testing::TestWithParam<int> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  const Tensor w = oracle::random({2, 3, 4}, 99);
  const std::vector<OpCase> cases = {
      {"add_broadcast", {{2, 3, 4}, {3, 1}}, [&](Tape& t, auto in) { return sum(t.constant(w) * add(in[0], in[1])); }},
      {"sub", {{3, 4}, {4}}, [&](Tape&, auto in) { return sum(square(sub(in[0], in[1]))); }},
      {"mul", {{3, 4}, {3, 4}}, [&](Tape&, auto in) { return sum(mul(in[0], in[1])); }},
      {"div", {{3, 4}, {3, 4}}, [&](Tape&, auto in) { return sum(div(in[0], in[1])); }, 3.0},
      {"scale_neg_add_scalar", {{5}}, [&](Tape&, auto in) { return sum(square(add_scalar(neg(scale(in[0], 2.5)), 1))); }},
      {"relu", {{3, 4}}, [&](Tape&, auto in) { return sum(square(relu(in[0]))); }},
      {"sigmoid", {{3, 4}}, [&](Tape&, auto in) { return sum(square(sigmoid(in[0]))); }},
      {"tanh", {{3, 4}}, [&](Tape&, auto in) { return sum(square(tanh(in[0]))); }},
      {"exp", {{3, 4}}, [&](Tape&, auto in) { return sum(exp(in[0])); }},
      {"log", {{3, 4}}, [&](Tape&, auto in) { return sum(log(in[0])); }, 4.0},
      {"sqrt", {{3, 4}}, [&](Tape&, auto in) { return sum(sqrt(in[0])); }, 4.0},
      {"matmul", {{2, 3, 4}, {4, 5}}, [&](Tape&, auto in) { return sum(square(matmul(in[0], in[1]))); }},
      {"matmul_batched", {{2, 3, 4}, {2, 4, 2}}, [&](Tape&, auto in) { return sum(square(matmul(in[0], in[1]))); }},
      {"transpose", {{2, 3, 4}}, [&](Tape& t, auto in) {
         return sum(transpose(in[0]) * t.constant(oracle::random({2, 4, 3}, 5)));
       }},
      {"reshape", {{2, 6}}, [&](Tape& t, auto in) { return sum(reshape(in[0], {3, 4}) * t.constant(oracle::random({3, 4}, 6))); }},
      {"concat", {{2, 3}, {2, 2}}, [&](Tape& t, auto in) {
         return sum(concat({in[0], in[1]}, 1) * t.constant(oracle::random({2, 5}, 7)));
       }},
      {"slice", {{3, 5}}, [&](Tape&, auto in) { return sum(square(slice(in[0], 1, 1, 3))); }},
      {"reduce_sum", {{2, 3, 4}}, [&](Tape&, auto in) { return sum(square(reduce_sum(in[0], 1, true))); }},
      {"reduce_mean", {{2, 3, 4}}, [&](Tape&, auto in) { return sum(square(reduce_mean(in[0], -1))); }},
      {"mean", {{2, 3}}, [&](Tape&, auto in) { return square(mean(in[0])); }},
      {"softmax", {{2, 3, 4}}, [&](Tape& t, auto in) { return sum(softmax(in[0], 1) * t.constant(w)); }},
      {"l2_normalize", {{2, 3, 4}}, [&](Tape& t, auto in) { return sum(l2_normalize(in[0], -1, 1e-12) * t.constant(w)); }},
      {"bce", {{2, 3}}, [&](Tape&, auto in) {
         return binary_cross_entropy(sigmoid(in[0]), Tensor::matrix({{1, 0, 1}, {0, 0, 1}}));
       }},
      {"batch_norm", {{5, 3}, {3}, {3}}, [&](Tape& t, auto in) {
         Tensor m = Tensor::zeros({3}), v = Tensor::full({3}, 1.0);
         return sum(batch_norm(in[0], in[1], in[2], NormState{m, v}, {}) * t.constant(oracle::random({5, 3}, 8)));
       }, 0.0, 1e-4},
      {"batch_norm_inference", {{5, 3}, {3}, {3}}, [&](Tape& t, auto in) {
         Tensor m = Tensor::vector({0.1, -0.2, 0.3}), v = Tensor::vector({0.5, 2, 1});
         return sum(batch_norm(in[0], in[1], in[2], NormState{m, v}, BatchNormOptions{false, 0.99, 1e-5}) *
                    t.constant(oracle::random({5, 3}, 8)));
       }},
  };
  const int seed = GetParam();
  for (const auto& c : cases) {
    std::vector<Tensor> inputs;
    for (std::size_t i = 0; i < c.shapes.size(); ++i) {
      Tensor x = oracle::random(c.shapes[i], static_cast<std::uint64_t>(seed * 100 + i));
      for (double& v : x.mutable_data()) v = c.offset > 0 ? c.offset + std::abs(v) : v;
      inputs.push_back(x);
    }
    const auto r = check(c.f, inputs, c.tolerance);
    EXPECT_TRUE(r.passed) << c.name << " seed " << seed << ": " << r.summary();
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, OpGradient, ::testing::Range(0, 20));
