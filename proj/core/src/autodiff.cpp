#include "poolforge/autodiff.hpp"

#include <string>

#include "poolforge/error.hpp"

namespace poolforge {

bool GradSink::wants(std::size_t slot) const {
  return tape_.nodes_[inputs_.at(slot)].requires_grad;
}

void GradSink::add(std::size_t slot, Tensor grad) {
  const std::size_t id = inputs_.at(slot);
  if (!tape_.nodes_[id].requires_grad) return;
  tape_.accumulate(id, std::move(grad));
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite value in constant of shape " + shape_string(value.shape()));
  nodes_.push_back(Node{"constant", std::move(value), {}, {}, false, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite()) throw NumericError("non-finite value in variable of shape " + shape_string(value.shape()));
  nodes_.push_back(Node{"variable", std::move(value), {}, {}, true, std::nullopt});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (!value.all_finite())
    throw NumericError(std::string(op) + " produced non-finite values (shape " + shape_string(value.shape()) + ")");
  Node node;
  node.op = op;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw ContractError(std::string(op) + ": input recorded on a different tape");
    node.inputs.push_back(in.id_);
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, Tensor grad) {
  Node& node = nodes_[id];
  if (grad.shape() != node.value.shape())
    throw DimensionError(std::string("gradient shape ") + shape_string(grad.shape()) + " does not match value shape " +
                         shape_string(node.value.shape()) + " of " + node.op);
  if (!node.grad) {
    node.grad = std::move(grad);
    return;
  }
  auto dst = node.grad->mutable_data();
  auto src = grad.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ContractError("backward: loss recorded on a different tape");
  const Tensor& lv = nodes_.at(loss.id_).value;
  if (lv.size() != 1) throw ContractError("backward: loss must be scalar, got shape " + shape_string(lv.shape()));
  for (Node& n : nodes_) n.grad.reset();
  nodes_[loss.id_].grad = Tensor::full(lv.shape(), 1.0);

  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.grad || !node.backward) continue;
    GradSink sink(*this, node.inputs);
    node.backward(*node.grad, sink);
  }
  for (Node& n : nodes_) {
    if (!n.grad) continue;
    if (!n.grad->all_finite()) throw NumericError(std::string("non-finite gradient at ") + n.op);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id());
  if (node.grad) return *node.grad;
  return Tensor::zeros(node.value.shape());
}

}  // namespace poolforge
