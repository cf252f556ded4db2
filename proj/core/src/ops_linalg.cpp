#include <string>

#include "broadcast.hpp"
#include "gemm.hpp"
#include "poolforge/error.hpp"
#include "poolforge/ops.hpp"

namespace poolforge {

using detail::for_each_broadcast;
using detail::gemm;

Var matmul(Var a, Var b) {
  const Tensor av = a.value();
  const Tensor bv = b.value();
  const Shape& sa = av.shape();
  const Shape& sb = bv.shape();
  if (sa.size() < 2 || sb.size() < 2 || sa[sa.size() - 1] != sb[sb.size() - 2])
    throw DimensionError("matmul: incompatible shapes " + shape_string(sa) + " and " + shape_string(sb));
  const std::size_t m = sa[sa.size() - 2];
  const std::size_t k = sa[sa.size() - 1];
  const std::size_t n = sb[sb.size() - 1];
  const Shape batch_a(sa.begin(), sa.end() - 2);
  const Shape batch_b(sb.begin(), sb.end() - 2);
  Shape batch;
  try {
    batch = broadcast_shapes(batch_a, batch_b);
  } catch (const DimensionError&) {
    throw DimensionError("matmul: incompatible batch prefixes in " + shape_string(sa) + " and " + shape_string(sb));
  }

  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor out(out_shape);

  // A 2-D right operand folds every batch row of `a` into one product.
  if (batch_b.empty()) {
    const std::size_t rows = av.size() / k;
    gemm(av.data().data(), false, bv.data().data(), false, out.mutable_data().data(), rows, n, k, false);
    return a.tape().record("matmul", std::move(out), {a, b}, [av, bv, rows, n, k](const Tensor& g, GradSink& sink) {
      if (sink.wants(0)) {
        Tensor ga(av.shape());
        gemm(g.data().data(), false, bv.data().data(), true, ga.mutable_data().data(), rows, k, n, false);
        sink.add(0, std::move(ga));
      }
      if (sink.wants(1)) {
        Tensor gb(bv.shape());
        gemm(av.data().data(), true, g.data().data(), false, gb.mutable_data().data(), k, n, rows, false);
        sink.add(1, std::move(gb));
      }
    });
  }

  const std::size_t mk = m * k;
  const std::size_t kn = k * n;
  const std::size_t mn = m * n;
  {
    double* o = out.mutable_data().data();
    const double* x = av.data().data();
    const double* y = bv.data().data();
    for_each_broadcast(batch, batch_a, batch_b, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      gemm(x + ia * mk, false, y + ib * kn, false, o + i * mn, m, n, k, false);
    });
  }
  return a.tape().record(
      "matmul", std::move(out), {a, b}, [av, bv, batch, batch_a, batch_b, m, n, k](const Tensor& g, GradSink& sink) {
        const std::size_t mk = m * k;
        const std::size_t kn = k * n;
        const std::size_t mn = m * n;
        const double* gd = g.data().data();
        const double* x = av.data().data();
        const double* y = bv.data().data();
        if (sink.wants(0)) {
          Tensor ga(av.shape());
          double* d = ga.mutable_data().data();
          for_each_broadcast(batch, batch_a, batch_b, [&](std::size_t i, std::size_t ia, std::size_t ib) {
            gemm(gd + i * mn, false, y + ib * kn, true, d + ia * mk, m, k, n, true);
          });
          sink.add(0, std::move(ga));
        }
        if (sink.wants(1)) {
          Tensor gb(bv.shape());
          double* d = gb.mutable_data().data();
          for_each_broadcast(batch, batch_a, batch_b, [&](std::size_t i, std::size_t ia, std::size_t ib) {
            gemm(x + ia * mk, true, gd + i * mn, false, d + ib * kn, k, n, m, true);
          });
          sink.add(1, std::move(gb));
        }
      });
}

namespace {

Tensor swap_last_two(const Tensor& x) {
  const Shape& s = x.shape();
  const std::size_t r = s.size();
  const std::size_t rows = s[r - 2];
  const std::size_t cols = s[r - 1];
  const std::size_t batch = x.size() / (rows * cols);
  Shape os = s;
  std::swap(os[r - 2], os[r - 1]);
  Tensor out(os);
  auto o = out.mutable_data();
  auto in = x.data();
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t base = b * rows * cols;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) o[base + j * rows + i] = in[base + i * cols + j];
  }
  return out;
}

}  // namespace

Var transpose(Var x) {
  if (x.value().rank() < 2) throw DimensionError("transpose needs rank >= 2, got " + shape_string(x.shape()));
  return x.tape().record("transpose", swap_last_two(x.value()), {x},
                         [](const Tensor& g, GradSink& sink) { sink.add(0, swap_last_two(g)); });
}

}  // namespace poolforge
