#include <cmath>
#include <string>

#include "poolforge/error.hpp"
#include "poolforge/ops.hpp"

namespace poolforge {

Var batch_norm(Var x, Var gamma, Var beta, const NormState& state, const BatchNormOptions& options) {
  const Tensor xv = x.value();
  if (xv.rank() < 1) throw DimensionError("batch_norm needs rank >= 1");
  const std::size_t features = xv.dim(-1);
  const std::size_t rows = xv.size() / features;
  const Shape param_shape{features};
  if (gamma.shape() != param_shape || beta.shape() != param_shape)
    throw DimensionError("batch_norm: gamma/beta must have shape " + shape_string(param_shape));
  if (state.running_mean.shape() != param_shape || state.running_var.shape() != param_shape)
    throw DimensionError("batch_norm: running statistics must have shape " + shape_string(param_shape));
  if (!(options.eps > 0.0)) throw ContractError("batch_norm: eps must be positive");

  Tensor mean(param_shape);
  Tensor var(param_shape);
  auto in = xv.data();
  if (options.training) {
    if (rows < 2) throw ContractError("batch_norm: training mode needs at least 2 rows, got " + std::to_string(rows));
    auto m = mean.mutable_data();
    auto v = var.mutable_data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t f = 0; f < features; ++f) m[f] += in[r * features + f];
    for (double& e : m) e /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t f = 0; f < features; ++f) {
        const double d = in[r * features + f] - m[f];
        v[f] += d * d;
      }
    for (double& e : v) e /= static_cast<double>(rows);

    auto rm = state.running_mean.mutable_data();
    auto rv = state.running_var.mutable_data();
    for (std::size_t f = 0; f < features; ++f) {
      rm[f] = options.momentum * rm[f] + (1.0 - options.momentum) * m[f];
      rv[f] = options.momentum * rv[f] + (1.0 - options.momentum) * v[f];
    }
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }

  Tensor inv_std(param_shape);
  {
    auto is = inv_std.mutable_data();
    auto v = var.data();
    for (std::size_t f = 0; f < features; ++f) is[f] = 1.0 / std::sqrt(v[f] + options.eps);
  }
  Tensor x_hat(xv.shape());
  Tensor out(xv.shape());
  {
    auto xh = x_hat.mutable_data();
    auto o = out.mutable_data();
    auto m = mean.data();
    auto is = inv_std.data();
    auto gm = gamma.value().data();
    auto bt = beta.value().data();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t f = 0; f < features; ++f) {
        const std::size_t k = r * features + f;
        xh[k] = (in[k] - m[f]) * is[f];
        o[k] = gm[f] * xh[k] + bt[f];
      }
  }

  const Tensor gv = gamma.value();
  const bool training = options.training;
  return x.tape().record(
      "batch_norm", std::move(out), {x, gamma, beta},
      [x_hat, inv_std, gv, rows, features, training](const Tensor& g, GradSink& sink) {
        auto gd = g.data();
        auto xh = x_hat.data();
        auto is = inv_std.data();
        auto gm = gv.data();
        Tensor dgamma(Shape{features});
        Tensor dbeta(Shape{features});
        auto dg = dgamma.mutable_data();
        auto db = dbeta.mutable_data();
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t f = 0; f < features; ++f) {
            const std::size_t k = r * features + f;
            dg[f] += gd[k] * xh[k];
            db[f] += gd[k];
          }
        if (sink.wants(0)) {
          Tensor dx(x_hat.shape());
          auto d = dx.mutable_data();
          if (training) {
            // dx = inv_std * (dxh - mean(dxh) - x_hat * mean(dxh * x_hat)), dxh = g * gamma
            const double inv_rows = 1.0 / static_cast<double>(rows);
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t f = 0; f < features; ++f) {
                const std::size_t k = r * features + f;
                d[k] = gm[f] * is[f] * (gd[k] - db[f] * inv_rows - xh[k] * dg[f] * inv_rows);
              }
          } else {
            for (std::size_t r = 0; r < rows; ++r)
              for (std::size_t f = 0; f < features; ++f) {
                const std::size_t k = r * features + f;
                d[k] = gd[k] * gm[f] * is[f];
              }
          }
          sink.add(0, std::move(dx));
        }
        sink.add(1, std::move(dgamma));
        sink.add(2, std::move(dbeta));
      });
}

}  // namespace poolforge
