#pragma once

#include <map>
#include <string>

#include "poolforge/autodiff.hpp"
#include "poolforge/ops.hpp"
#include "poolforge/tensor.hpp"

namespace poolforge::layers {

// Named parameter collection. Trainable tensors receive gradients; buffers
// hold running statistics updated during training steps. Names are
// '/'-separated paths such as "video/netvlad/centers".
class ParamStore {
 public:
  void add_param(const std::string& name, Tensor value);
  void add_buffer(const std::string& name, Tensor value);

  bool has_param(const std::string& name) const { return params_.count(name) != 0; }
  bool has_buffer(const std::string& name) const { return buffers_.count(name) != 0; }
  const Tensor& param(const std::string& name) const;
  Tensor& mutable_param(const std::string& name);
  const Tensor& buffer(const std::string& name) const;
  Tensor& mutable_buffer(const std::string& name);

  const std::map<std::string, Tensor>& params() const { return params_; }
  const std::map<std::string, Tensor>& buffers() const { return buffers_; }
  std::size_t parameter_count() const;

  // Bitwise equality of names, shapes and values.
  bool identical(const ParamStore& other) const;

 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, Tensor> buffers_;
};

// Exposes a ParamStore on a Tape for one forward pass. Each parameter becomes
// a single leaf, created on first use.
class Binder {
 public:
  // With `track_grads` false parameters are bound as constants, which skips
  // all parameter adjoints (inference).
  Binder(Tape& tape, ParamStore& store, bool training, bool track_grads = true);

  Var param(const std::string& name);
  // Uses `value` for parameter `name` in this pass instead of a fresh leaf.
  void bind(const std::string& name, Var value);
  Tensor& buffer(const std::string& name) { return store_.mutable_buffer(name); }
  NormState norm_state(const std::string& prefix);

  Tape& tape() { return tape_; }
  bool training() const { return training_; }
  const std::map<std::string, Var>& bound() const { return bound_; }

  // Gradients of every bound parameter after tape().backward().
  std::map<std::string, Tensor> gradients() const;

 private:
  Tape& tape_;
  ParamStore& store_;
  bool training_;
  bool track_grads_;
  std::map<std::string, Var> bound_;
};

std::string join(const std::string& prefix, const std::string& name);

// Registers "<prefix>/running_mean" and "<prefix>/running_var" buffers.
void add_norm_state(ParamStore& store, const std::string& prefix, std::size_t features);

}  // namespace poolforge::layers
