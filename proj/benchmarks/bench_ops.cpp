#include <benchmark/benchmark.h>

#include <algorithm>

#include "poolforge/autodiff.hpp"
#include "poolforge/data/record_io.hpp"
#include "poolforge/data/synthetic.hpp"
#include "poolforge/eval/gap.hpp"
#include "poolforge/layers/netvlad.hpp"
#include "poolforge/models/model.hpp"
#include "poolforge/ops.hpp"
#include "poolforge/random.hpp"
#include "poolforge/train/trainer.hpp"

using namespace poolforge;

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = rng.normal_tensor({n, n}, 1.0), b = rng.normal_tensor({n, n}, 1.0);
  for (auto _ : state) {
    Tape tape;
    benchmark::DoNotOptimize(matmul(tape.constant(a), tape.constant(b)));
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(512);

static void BM_SoftmaxBackward(benchmark::State& state) {
  Rng rng(2);
  const Tensor x = rng.normal_tensor({256, static_cast<std::size_t>(state.range(0))}, 1.0);
  for (auto _ : state) {
    Tape tape;
    Var v = tape.variable(x);
    tape.backward(sum(square(softmax(v, 1))));
    benchmark::DoNotOptimize(tape.grad(v));
  }
}
BENCHMARK(BM_SoftmaxBackward)->Arg(8)->Arg(64);

static void BM_NetVladForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t f = 1024, c = 8;
  Rng rng(3);
  const Tensor x = rng.normal_tensor({8, n, f}, 1.0);
  const Tensor centers = rng.normal_tensor({c, f}, 0.1), keys = rng.normal_tensor({f, c}, 0.03);
  const Tensor bias = Tensor::zeros({c});
  for (auto _ : state) {
    Tape tape;
    layers::NetVladParams p{tape.variable(centers), tape.variable(keys), tape.variable(bias)};
    tape.backward(sum(layers::netvlad(tape.constant(x), p)));
    benchmark::DoNotOptimize(tape.grad(p.centers));
  }
}
BENCHMARK(BM_NetVladForwardBackward)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  train::TrainConfig cfg;
  cfg.model.architecture = static_cast<models::Architecture>(state.range(0));
  data::SyntheticSpec spec;
  auto videos = train::prepare(data::generate_corpus(spec, 32), cfg.model);
  train::Trainer t(cfg, videos);
  for (auto _ : state) benchmark::DoNotOptimize(t.step());
  state.SetLabel(std::string(models::architecture_tag(cfg.model.architecture)));
}
BENCHMARK(BM_TrainStep)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

static void BM_GapAt20(benchmark::State& state) {
  const auto videos = static_cast<std::size_t>(state.range(0));
  const std::size_t labels = 1000;
  Rng rng(4);
  eval::PredictionSet set;
  set.label_count = labels;
  for (std::size_t v = 0; v < videos; ++v) {
    const Tensor s = rng.uniform_tensor({labels}, 0.0, 1.0);
    eval::VideoPredictions p;
    p.id = std::to_string(v);
    p.top = eval::top_k_predictions(s.data());
    p.truth = {static_cast<std::uint32_t>(v % labels), static_cast<std::uint32_t>((v * 7 + 1) % labels)};
    std::sort(p.truth.begin(), p.truth.end());
    p.truth.erase(std::unique(p.truth.begin(), p.truth.end()), p.truth.end());
    set.videos.push_back(std::move(p));
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::gap_at_20(set));
}
BENCHMARK(BM_GapAt20)->Arg(1000)->Arg(10000);

static void BM_RecordRoundTrip(benchmark::State& state) {
  data::SyntheticSpec spec;
  const auto corpus = data::generate_corpus(spec, 16);
  for (auto _ : state) benchmark::DoNotOptimize(data::decode_records(data::encode_records(corpus)));
}
BENCHMARK(BM_RecordRoundTrip)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
