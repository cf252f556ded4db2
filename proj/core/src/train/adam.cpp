#include "poolforge/train/adam.hpp"

#include <cmath>

#include "poolforge/error.hpp"

namespace poolforge::train {

void AdamOptions::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("adam: betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("adam: eps must be positive");
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::uint64_t t, double lr,
                 const AdamOptions& o) {
  if (grad.shape() != param.shape() || m.shape() != param.shape() || v.shape() != param.shape())
    throw DimensionError("adam: shape mismatch for parameter " + shape_string(param.shape()));
  if (t == 0) throw ContractError("adam: step counter starts at 1");
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
  auto p = param.mutable_data();
  auto mm = m.mutable_data();
  auto vv = v.mutable_data();
  auto g = grad.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    mm[i] = o.beta1 * mm[i] + (1.0 - o.beta1) * g[i];
    vv[i] = o.beta2 * vv[i] + (1.0 - o.beta2) * g[i] * g[i];
    const double mhat = mm[i] / c1;
    const double vhat = vv[i] / c2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + o.eps);
  }
}

void adam_step(layers::ParamStore& params, const std::map<std::string, Tensor>& grads, AdamState& state, double lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("adam: learning rate must be positive");
  for (const auto& [name, g] : grads) {
    if (!params.has_param(name)) throw ContractError("adam: gradient for unknown parameter '" + name + "'");
    if (g.shape() != params.param(name).shape())
      throw DimensionError("adam: gradient shape " + shape_string(g.shape()) + " for parameter '" + name + "'");
    if (!g.all_finite()) throw NumericError("adam: non-finite gradient for parameter '" + name + "'");
  }
  const std::uint64_t t = state.step + 1;
  for (const auto& entry : params.params()) {
    const std::string& name = entry.first;
    const Shape& shape = entry.second.shape();
    auto [mit, m_new] = state.m.try_emplace(name, shape);
    auto [vit, v_new] = state.v.try_emplace(name, shape);
    (void)m_new;
    (void)v_new;
    auto git = grads.find(name);
    const Tensor grad = git != grads.end() ? git->second : Tensor(shape);
    adam_update(params.mutable_param(name), grad, mit->second, vit->second, t, lr, state.options);
  }
  state.step = t;
}

}  // namespace poolforge::train
