#include "poolforge/layers/params.hpp"

#include "poolforge/error.hpp"

namespace poolforge::layers {

std::string join(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "/" + name;
}

void ParamStore::add_param(const std::string& name, Tensor value) {
  if (params_.count(name) || buffers_.count(name)) throw ConfigError("duplicate parameter name " + name);
  params_.emplace(name, std::move(value));
}

void ParamStore::add_buffer(const std::string& name, Tensor value) {
  if (params_.count(name) || buffers_.count(name)) throw ConfigError("duplicate buffer name " + name);
  buffers_.emplace(name, std::move(value));
}

const Tensor& ParamStore::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

Tensor& ParamStore::mutable_param(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

const Tensor& ParamStore::buffer(const std::string& name) const {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) throw ConfigError("unknown buffer " + name);
  return it->second;
}

Tensor& ParamStore::mutable_buffer(const std::string& name) {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) throw ConfigError("unknown buffer " + name);
  return it->second;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

bool ParamStore::identical(const ParamStore& other) const {
  auto same = [](const std::map<std::string, Tensor>& a, const std::map<std::string, Tensor>& b) {
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
      if (ia->first != ib->first || !ia->second.same_values(ib->second)) return false;
    return true;
  };
  return same(params_, other.params_) && same(buffers_, other.buffers_);
}

Binder::Binder(Tape& tape, ParamStore& store, bool training, bool track_grads)
    : tape_(tape), store_(store), training_(training), track_grads_(track_grads) {}

Var Binder::param(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Tensor& value = store_.param(name);
  const Var v = track_grads_ ? tape_.variable(value) : tape_.constant(value);
  bound_.emplace(name, v);
  return v;
}

void Binder::bind(const std::string& name, Var value) {
  if (value.shape() != store_.param(name).shape())
    throw DimensionError("bind " + name + ": shape " + shape_string(value.shape()) + " vs " +
                         shape_string(store_.param(name).shape()));
  if (!bound_.emplace(name, value).second) throw ContractError("bind " + name + ": already bound");
}

NormState Binder::norm_state(const std::string& prefix) {
  return NormState{store_.mutable_buffer(join(prefix, "running_mean")), store_.mutable_buffer(join(prefix, "running_var"))};
}

std::map<std::string, Tensor> Binder::gradients() const {
  std::map<std::string, Tensor> grads;
  for (const auto& [name, v] : bound_) grads.emplace(name, tape_.grad(v));
  return grads;
}

void add_norm_state(ParamStore& store, const std::string& prefix, std::size_t features) {
  store.add_buffer(join(prefix, "running_mean"), Tensor::zeros({features}));
  store.add_buffer(join(prefix, "running_var"), Tensor::full({features}, 1.0));
}

}  // namespace poolforge::layers
