#include "egt/tape.hpp"

#include "egt/error.hpp"

namespace egt {

Var Tape::constant(Tensor value) {
  check_finite(value, "constant input");
  nodes_.push_back(Node{"constant", std::move(value), {}, false, false, {}});
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Tensor value) {
  check_finite(value, "parameter");
  nodes_.push_back(Node{"parameter", std::move(value), {}, true, false, {}});
  return Var{nodes_.size() - 1};
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  check_finite(value, op);
  bool needs = false;
  for (Var in : inputs) {
    require(in.id < nodes_.size(), "op " + std::string(op) + " received a foreign variable");
    needs = needs || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(Node{std::string(op), std::move(value), {}, needs, false, needs ? std::move(backward) : BackwardFn{}});
  return Var{nodes_.size() - 1};
}

Tensor& Tape::grad_for(Var v) {
  Node& node = nodes_.at(v.id);
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape());
    node.has_grad = true;
  }
  return node.grad;
}

Tensor Tape::grad(Var v) const {
  const Node& node = nodes_.at(v.id);
  return node.has_grad ? node.grad : Tensor(node.value.shape());
}

void Tape::backward(Var root) {
  require(root.id < nodes_.size(), "backward from unknown variable");
  require(nodes_[root.id].value.size() == 1, "backward root must be a scalar");
  grad_for(root).fill(1.0);
  for (std::size_t id = root.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.has_grad || !node.backward) {
      continue;
    }
    if (!fault_op_.empty() && node.op == fault_op_) {
      for (double& g : node.grad.data()) {
        g *= fault_scale_;
      }
    }
    // The closure may append gradient buffers on other nodes but never adds nodes,
    // so the reference stays valid.
    node.backward(*this, node.grad, node.value);
  }
}

void Tape::inject_backward_fault(std::string op, double scale) {
  fault_op_ = std::move(op);
  fault_scale_ = scale;
}

}  // namespace egt
