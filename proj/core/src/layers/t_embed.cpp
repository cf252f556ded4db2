#include "poolforge/layers/t_embed.hpp"

#include <algorithm>
#include <cmath>

#include "poolforge/error.hpp"

namespace poolforge::layers {

void add_whitening_state(ParamStore& store, const std::string& prefix, std::size_t width) {
  store.add_buffer(join(prefix, "mean"), Tensor::zeros({width}));
  store.add_buffer(join(prefix, "var"), Tensor::full({width}, 1.0));
}

WhiteningState bind_whitening_state(Binder& binder, const std::string& prefix) {
  return WhiteningState{binder.buffer(join(prefix, "mean")), binder.buffer(join(prefix, "var"))};
}

Var t_embed(Var x, Var centers, WhiteningState* white, bool training, double eps) {
  const Shape xs = x.shape();
  if (xs.size() < 2) throw DimensionError("t_embed: expected [..., N, F], got " + shape_string(xs));
  const std::size_t f = xs.back();
  const std::size_t n = xs[xs.size() - 2];
  const std::size_t k = centers.dim(0);
  if (centers.dim(1) != f)
    throw DimensionError("t_embed: input width " + std::to_string(f) + " vs centers " + shape_string(centers.shape()));

  Shape lifted(xs.begin(), xs.end() - 1);
  lifted.insert(lifted.end(), {1, f});
  const Var residuals = reshape(x, lifted) - centers;          // [..., N, K, F]
  const Var unit = l2_normalize(residuals, -1, eps);
  Shape flat(xs.begin(), xs.end() - 2);
  flat.insert(flat.end(), {n, k * f});
  const Var r = reshape(unit, flat);
  if (white == nullptr) return r;

  const std::size_t width = k * f;
  if (white->mean.shape() != Shape{width} || white->var.shape() != Shape{width})
    throw DimensionError("t_embed: whitening state does not match width " + std::to_string(width));

  // The output uses the statistics as they were before this batch, so it
  // depends on x only through r.
  const Tensor mean = white->mean.reshaped(Shape{width});
  Tensor inv_std(Shape{width});
  {
    auto is = inv_std.mutable_data();
    auto rv = white->var.data();
    for (std::size_t j = 0; j < width; ++j) is[j] = 1.0 / std::sqrt(std::max(rv[j], white->eps));
  }

  if (training) {
    const auto values = r.value().data();
    const std::size_t rows = values.size() / width;
    std::vector<double> m(width, 0.0);
    std::vector<double> v(width, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < width; ++j) m[j] += values[i * width + j];
    for (double& e : m) e /= static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < width; ++j) {
        const double d = values[i * width + j] - m[j];
        v[j] += d * d;
      }
    for (double& e : v) e /= static_cast<double>(rows);
    auto rm = white->mean.mutable_data();
    auto rv = white->var.mutable_data();
    for (std::size_t j = 0; j < width; ++j) {
      rm[j] = white->momentum * rm[j] + (1.0 - white->momentum) * m[j];
      rv[j] = std::max(white->momentum * rv[j] + (1.0 - white->momentum) * v[j], white->eps);
    }
  }

  Tape& tape = x.tape();
  return (r - tape.constant(mean)) * tape.constant(std::move(inv_std));
}

}  // namespace poolforge::layers
