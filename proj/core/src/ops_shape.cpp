#include <algorithm>
#include <string>

#include "broadcast.hpp"
#include "poolforge/error.hpp"
#include "poolforge/ops.hpp"

namespace poolforge {

using detail::axis_view;

Var reshape(Var x, Shape shape) {
  const Shape in_shape = x.shape();
  Tensor out = x.value().reshaped(std::move(shape));
  return x.tape().record("reshape", std::move(out), {x},
                         [in_shape](const Tensor& g, GradSink& sink) { sink.add(0, g.reshaped(in_shape)); });
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw ContractError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  const std::size_t ax = normalize_axis(axis, first.size());
  std::vector<Shape> shapes;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i)
      if (i != ax && s[i] != first[i]) ok = false;
    if (!ok) throw DimensionError("concat: shape " + shape_string(s) + " incompatible with " + shape_string(first));
    shapes.push_back(s);
    total += s[ax];
  }
  Shape out_shape = first;
  out_shape[ax] = total;
  const auto view = axis_view(out_shape, ax);
  Tensor out(out_shape);
  auto o = out.mutable_data();
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto in = parts[p].value().data();
    const std::size_t block = shapes[p][ax] * view.inner;
    for (std::size_t r = 0; r < view.outer; ++r)
      std::copy_n(in.begin() + r * block, block, o.begin() + (r * total + offset) * view.inner);
    offset += shapes[p][ax];
  }
  return parts.front().tape().record(
      "concat", std::move(out), parts, [shapes, ax, view, total](const Tensor& g, GradSink& sink) {
        auto gd = g.data();
        std::size_t offset = 0;
        for (std::size_t p = 0; p < shapes.size(); ++p) {
          const std::size_t len = shapes[p][ax];
          if (sink.wants(p)) {
            Tensor gp(shapes[p]);
            auto d = gp.mutable_data();
            const std::size_t block = len * view.inner;
            for (std::size_t r = 0; r < view.outer; ++r)
              std::copy_n(gd.begin() + (r * total + offset) * view.inner, block, d.begin() + r * block);
            sink.add(p, std::move(gp));
          }
          offset += len;
        }
      });
}

Var slice(Var x, int axis, std::size_t start, std::size_t length) {
  const Shape in_shape = x.shape();
  const std::size_t ax = normalize_axis(axis, in_shape.size());
  if (length == 0 || start + length > in_shape[ax])
    throw DimensionError("slice [" + std::to_string(start) + ", " + std::to_string(start + length) +
                         ") out of range for axis " + std::to_string(ax) + " of " + shape_string(in_shape));
  const auto view = axis_view(in_shape, ax);
  Shape out_shape = in_shape;
  out_shape[ax] = length;
  Tensor out(out_shape);
  auto o = out.mutable_data();
  auto in = x.value().data();
  const std::size_t block = length * view.inner;
  for (std::size_t r = 0; r < view.outer; ++r)
    std::copy_n(in.begin() + (r * view.n + start) * view.inner, block, o.begin() + r * block);
  return x.tape().record("slice", std::move(out), {x}, [in_shape, view, start, block](const Tensor& g, GradSink& sink) {
    Tensor gx(in_shape);
    auto d = gx.mutable_data();
    auto gd = g.data();
    for (std::size_t r = 0; r < view.outer; ++r)
      std::copy_n(gd.begin() + r * block, block, d.begin() + (r * view.n + start) * view.inner);
    sink.add(0, std::move(gx));
  });
}

namespace {

Var reduce_axis(const char* name, Var x, int axis, bool keepdims, double factor) {
  const Shape in_shape = x.shape();
  const std::size_t ax = normalize_axis(axis, in_shape.size());
  const auto view = axis_view(in_shape, ax);
  Shape out_shape = in_shape;
  if (keepdims)
    out_shape[ax] = 1;
  else
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(ax));
  Tensor out(out_shape);
  auto o = out.mutable_data();
  auto in = x.value().data();
  for (std::size_t r = 0; r < view.outer; ++r)
    for (std::size_t i = 0; i < view.n; ++i)
      for (std::size_t j = 0; j < view.inner; ++j) o[r * view.inner + j] += in[(r * view.n + i) * view.inner + j];
  if (factor != 1.0)
    for (double& v : o) v *= factor;
  return x.tape().record(name, std::move(out), {x}, [in_shape, view, factor](const Tensor& g, GradSink& sink) {
    Tensor gx(in_shape);
    auto d = gx.mutable_data();
    auto gd = g.data();
    for (std::size_t r = 0; r < view.outer; ++r)
      for (std::size_t i = 0; i < view.n; ++i)
        for (std::size_t j = 0; j < view.inner; ++j) d[(r * view.n + i) * view.inner + j] = gd[r * view.inner + j] * factor;
    sink.add(0, std::move(gx));
  });
}

Var reduce_all(const char* name, Var x, double factor) {
  const Shape in_shape = x.shape();
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return x.tape().record(name, Tensor::scalar(total * factor), {x}, [in_shape, factor](const Tensor& g, GradSink& sink) {
    sink.add(0, Tensor::full(in_shape, g.item() * factor));
  });
}

}  // namespace

Var reduce_sum(Var x, int axis, bool keepdims) { return reduce_axis("reduce_sum", x, axis, keepdims, 1.0); }

Var reduce_mean(Var x, int axis, bool keepdims) {
  const std::size_t n = x.shape()[normalize_axis(axis, x.value().rank())];
  return reduce_axis("reduce_mean", x, axis, keepdims, 1.0 / static_cast<double>(n));
}

Var sum(Var x) { return reduce_all("sum", x, 1.0); }

Var mean(Var x) { return reduce_all("mean", x, 1.0 / static_cast<double>(x.value().size())); }

}  // namespace poolforge
