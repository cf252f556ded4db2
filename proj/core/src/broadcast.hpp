#pragma once

#include <cstddef>
#include <vector>

#include "poolforge/tensor.hpp"

namespace poolforge::detail {

// Strides of `in` when viewed with the shape `out`; broadcast axes get 0.
inline std::vector<std::size_t> aligned_strides(const Shape& in, const Shape& out) {
  const std::size_t r = out.size();
  std::vector<std::size_t> strides(r, 0);
  std::size_t stride = 1;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const std::size_t ai = in.size() - 1 - k;
    const std::size_t ao = r - 1 - k;
    strides[ao] = in[ai] == 1 ? 0 : stride;
    stride *= in[ai];
  }
  return strides;
}

// Calls fn(out_offset, a_offset, b_offset) for every element of `out`.
template <class Fn>
void for_each_broadcast(const Shape& out, const Shape& a, const Shape& b, Fn&& fn) {
  const std::size_t r = out.size();
  if (r == 0) {
    fn(std::size_t{0}, std::size_t{0}, std::size_t{0});
    return;
  }
  const std::size_t total = shape_size(out);
  if (a == out && b == out) {
    for (std::size_t i = 0; i < total; ++i) fn(i, i, i);
    return;
  }
  const auto sa = aligned_strides(a, out);
  const auto sb = aligned_strides(b, out);
  const std::size_t inner = out[r - 1];
  const std::size_t ia = sa[r - 1];
  const std::size_t ib = sb[r - 1];
  std::vector<std::size_t> idx(r, 0);
  std::size_t oa = 0;
  std::size_t ob = 0;
  for (std::size_t o = 0; o < total; o += inner) {
    for (std::size_t k = 0; k < inner; ++k) fn(o + k, oa + k * ia, ob + k * ib);
    for (std::size_t ax = r - 1; ax-- > 0;) {
      if (++idx[ax] < out[ax]) {
        oa += sa[ax];
        ob += sb[ax];
        break;
      }
      oa -= sa[ax] * (out[ax] - 1);
      ob -= sb[ax] * (out[ax] - 1);
      idx[ax] = 0;
    }
  }
}

// Sums `g` over the axes along which `target` was broadcast to reach g's shape.
inline Tensor sum_to_shape(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  Tensor out(target);
  auto dst = out.mutable_data();
  auto src = g.data();
  for_each_broadcast(g.shape(), g.shape(), target,
                     [&](std::size_t o, std::size_t, std::size_t t) { dst[t] += src[o]; });
  return out;
}

// View of a tensor as [outer, axis, inner] around one axis.
struct AxisView {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

inline AxisView axis_view(const Shape& shape, std::size_t axis) {
  AxisView v;
  for (std::size_t i = 0; i < axis; ++i) v.outer *= shape[i];
  v.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) v.inner *= shape[i];
  return v;
}

}  // namespace poolforge::detail
