#include <cmath>
#include <string>

#include "broadcast.hpp"
#include "poolforge/error.hpp"
#include "poolforge/ops.hpp"

namespace poolforge {

using detail::for_each_broadcast;

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r, 1);
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t da = k < a.size() ? a[a.size() - 1 - k] : 1;
    const std::size_t db = k < b.size() ? b[b.size() - 1 - k] : 1;
    if (da != db && da != 1 && db != 1)
      throw DimensionError("cannot broadcast shapes " + shape_string(a) + " and " + shape_string(b));
    out[r - 1 - k] = std::max(da, db);
  }
  return out;
}

namespace {

// f(x, y) forward; dfa/dfb give the partials w.r.t. x and y.
template <class F, class DA, class DB>
Var binary(const char* name, Var a, Var b, F f, DA dfa, DB dfb) {
  const Tensor av = a.value();
  const Tensor bv = b.value();
  Shape out_shape = broadcast_shapes(av.shape(), bv.shape());
  Tensor out(out_shape);
  {
    auto o = out.mutable_data();
    auto x = av.data();
    auto y = bv.data();
    for_each_broadcast(out_shape, av.shape(), bv.shape(),
                       [&](std::size_t i, std::size_t ia, std::size_t ib) { o[i] = f(x[ia], y[ib]); });
  }
  return a.tape().record(name, std::move(out), {a, b}, [av, bv, dfa, dfb](const Tensor& g, GradSink& sink) {
    auto x = av.data();
    auto y = bv.data();
    auto gd = g.data();
    if (sink.wants(0)) {
      Tensor ga(av.shape());
      auto d = ga.mutable_data();
      for_each_broadcast(g.shape(), av.shape(), bv.shape(),
                         [&](std::size_t i, std::size_t ia, std::size_t ib) { d[ia] += gd[i] * dfa(x[ia], y[ib]); });
      sink.add(0, std::move(ga));
    }
    if (sink.wants(1)) {
      Tensor gb(bv.shape());
      auto d = gb.mutable_data();
      for_each_broadcast(g.shape(), av.shape(), bv.shape(),
                         [&](std::size_t i, std::size_t ia, std::size_t ib) { d[ib] += gd[i] * dfb(x[ia], y[ib]); });
      sink.add(1, std::move(gb));
    }
  });
}

// f(x) forward; df(x, y) gives the derivative from input and output.
template <class F, class DF>
Var unary(const char* name, Var x, F f, DF df) {
  const Tensor xv = x.value();
  Tensor out(xv.shape());
  {
    auto o = out.mutable_data();
    auto in = xv.data();
    for (std::size_t i = 0; i < in.size(); ++i) o[i] = f(in[i]);
  }
  const Tensor yv = out;
  return x.tape().record(name, std::move(out), {x}, [xv, yv, df](const Tensor& g, GradSink& sink) {
    Tensor gx(xv.shape());
    auto d = gx.mutable_data();
    auto in = xv.data();
    auto y = yv.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = gd[i] * df(in[i], y[i]);
    sink.add(0, std::move(gx));
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var div(Var a, Var b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; }, [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Var scale(Var x, double factor) {
  return unary(
      "scale", x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var x, double value) {
  return unary(
      "add_scalar", x, [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Var neg(Var x) {
  return unary(
      "neg", x, [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Var relu(Var x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  for (double v : x.value().data())
    if (v <= 0.0) throw NumericError("log of non-positive value " + std::to_string(v));
  return unary(
      "log", x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var sqrt(Var x) {
  for (double v : x.value().data())
    if (v < 0.0) throw NumericError("sqrt of negative value " + std::to_string(v));
  return unary(
      "sqrt", x, [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Var square(Var x) {
  return unary(
      "square", x, [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

}  // namespace poolforge
