#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "poolforge/tensor.hpp"

namespace poolforge {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning Tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(int axis) const { return value().dim(axis); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Receives the adjoints an op's backward function produces for its inputs.
class GradSink {
 public:
  // False when the input at `slot` does not need a gradient; ops use this to
  // skip work.
  bool wants(std::size_t slot) const;
  void add(std::size_t slot, Tensor grad);

 private:
  friend class Tape;
  GradSink(Tape& tape, const std::vector<std::size_t>& inputs) : tape_(tape), inputs_(inputs) {}

  Tape& tape_;
  const std::vector<std::size_t>& inputs_;
};

using BackwardFn = std::function<void(const Tensor& grad_out, GradSink& sink)>;

// Append-only record of a forward computation. Nodes only reference earlier
// nodes, so a single reverse sweep yields every gradient. One tape per
// training step; a tape is not thread-safe.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives a gradient (data, frozen statistics).
  Var constant(Tensor value);
  // Leaf whose gradient is accumulated by backward().
  Var variable(Tensor value);
  // Records an op output. `backward` is only called when at least one input
  // requires a gradient. Throws NumericError when `value` is not finite.
  Var record(const char* op, Tensor value, std::vector<Var> inputs, BackwardFn backward);

  // Reverse sweep from a scalar loss. Clears gradients from any previous call.
  void backward(Var loss);

  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }
  bool has_grad(Var v) const { return nodes_.at(v.id()).grad.has_value(); }
  // Gradient of the last backward() w.r.t. `v`; zeros when `v` did not
  // influence the loss.
  Tensor grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }

 private:
  friend class GradSink;

  struct Node {
    const char* op = nullptr;
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    std::optional<Tensor> grad;
  };

  void accumulate(std::size_t id, Tensor grad);

  // deque keeps references to earlier nodes stable while recording.
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace poolforge
