#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "broadcast.hpp"
#include "poolforge/error.hpp"
#include "poolforge/ops.hpp"

namespace poolforge {

using detail::axis_view;

Var softmax(Var x, int axis) {
  const Tensor& xv = x.value();
  const std::size_t ax = normalize_axis(axis, xv.rank());
  const auto view = axis_view(xv.shape(), ax);
  Tensor out(xv.shape());
  auto o = out.mutable_data();
  auto in = xv.data();
  for (std::size_t r = 0; r < view.outer; ++r) {
    for (std::size_t j = 0; j < view.inner; ++j) {
      const std::size_t base = r * view.n * view.inner + j;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < view.n; ++i) mx = std::max(mx, in[base + i * view.inner]);
      if (!std::isfinite(mx)) throw NumericError("softmax of non-finite input");
      double total = 0.0;
      for (std::size_t i = 0; i < view.n; ++i) {
        const double e = std::exp(in[base + i * view.inner] - mx);
        o[base + i * view.inner] = e;
        total += e;
      }
      for (std::size_t i = 0; i < view.n; ++i) o[base + i * view.inner] /= total;
    }
  }
  const Tensor yv = out;
  return x.tape().record("softmax", std::move(out), {x}, [yv, view](const Tensor& g, GradSink& sink) {
    Tensor gx(yv.shape());
    auto d = gx.mutable_data();
    auto y = yv.data();
    auto gd = g.data();
    for (std::size_t r = 0; r < view.outer; ++r) {
      for (std::size_t j = 0; j < view.inner; ++j) {
        const std::size_t base = r * view.n * view.inner + j;
        double dot = 0.0;
        for (std::size_t i = 0; i < view.n; ++i) dot += gd[base + i * view.inner] * y[base + i * view.inner];
        for (std::size_t i = 0; i < view.n; ++i) {
          const std::size_t k = base + i * view.inner;
          d[k] = y[k] * (gd[k] - dot);
        }
      }
    }
    sink.add(0, std::move(gx));
  });
}

Var l2_normalize(Var x, int axis, double eps) {
  if (!(eps > 0.0)) throw ContractError("l2_normalize: eps must be positive");
  const Tensor& xv = x.value();
  const std::size_t ax = normalize_axis(axis, xv.rank());
  const auto view = axis_view(xv.shape(), ax);
  Tensor out(xv.shape());
  Tensor norms(Shape{view.outer * view.inner});
  auto o = out.mutable_data();
  auto nd = norms.mutable_data();
  auto in = xv.data();
  for (std::size_t r = 0; r < view.outer; ++r) {
    for (std::size_t j = 0; j < view.inner; ++j) {
      const std::size_t base = r * view.n * view.inner + j;
      double ss = 0.0;
      for (std::size_t i = 0; i < view.n; ++i) ss += in[base + i * view.inner] * in[base + i * view.inner];
      const double n = std::sqrt(ss);
      nd[r * view.inner + j] = n;
      const double denom = std::max(n, eps);
      for (std::size_t i = 0; i < view.n; ++i) o[base + i * view.inner] = in[base + i * view.inner] / denom;
    }
  }
  const Tensor yv = out;
  return x.tape().record("l2_normalize", std::move(out), {x}, [yv, norms, view, eps](const Tensor& g, GradSink& sink) {
    Tensor gx(yv.shape());
    auto d = gx.mutable_data();
    auto y = yv.data();
    auto gd = g.data();
    auto nd = norms.data();
    for (std::size_t r = 0; r < view.outer; ++r) {
      for (std::size_t j = 0; j < view.inner; ++j) {
        const std::size_t base = r * view.n * view.inner + j;
        const double n = nd[r * view.inner + j];
        if (n > eps) {
          double dot = 0.0;
          for (std::size_t i = 0; i < view.n; ++i) dot += gd[base + i * view.inner] * y[base + i * view.inner];
          for (std::size_t i = 0; i < view.n; ++i) {
            const std::size_t k = base + i * view.inner;
            d[k] = (gd[k] - y[k] * dot) / n;
          }
        } else {
          for (std::size_t i = 0; i < view.n; ++i) d[base + i * view.inner] = gd[base + i * view.inner] / eps;
        }
      }
    }
    sink.add(0, std::move(gx));
  });
}

Var binary_cross_entropy(Var probs, const Tensor& targets, double eps) {
  const Tensor pv = probs.value();
  if (pv.shape() != targets.shape())
    throw DimensionError("binary_cross_entropy: probabilities " + shape_string(pv.shape()) + " vs targets " +
                         shape_string(targets.shape()));
  auto p = pv.data();
  auto y = targets.data();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], eps, 1.0 - eps);
    total -= y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  return probs.tape().record(
      "binary_cross_entropy", Tensor::scalar(total), {probs}, [pv, targets, eps](const Tensor& g, GradSink& sink) {
        Tensor gp(pv.shape());
        auto d = gp.mutable_data();
        auto p = pv.data();
        auto y = targets.data();
        const double go = g.item();
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (p[i] < eps || p[i] > 1.0 - eps) continue;
          d[i] = go * (-y[i] / p[i] + (1.0 - y[i]) / (1.0 - p[i]));
        }
        sink.add(0, std::move(gp));
      });
}

}  // namespace poolforge
