#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "egt/tensor.hpp"

namespace egt {

class Tape;

// Handle to a value recorded on a Tape. Only meaningful together with the tape
// that produced it.
struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const noexcept { return id != npos; }
};

// Backward closure: receives the op's output gradient and output value and
// accumulates into the gradients of its inputs through Tape::grad_for.
using BackwardFn = std::function<void(Tape& tape, const Tensor& output_grad, const Tensor& output)>;

// Ordered record of differentiable operations. backward() replays the record
// in reverse and leaves one gradient per leaf that requires it.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  // Records an op output. `backward` runs only when at least one input
  // requires a gradient. The value is checked for NaN/Inf.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  const std::string& op_name(Var v) const { return nodes_.at(v.id).op; }

  // Gradient buffer for `v`, zero-initialised on first access.
  Tensor& grad_for(Var v);
  // Gradient after backward(); zeros if nothing flowed into `v`.
  Tensor grad(Var v) const;

  void backward(Var root);

  std::size_t size() const noexcept { return nodes_.size(); }

  // Test seam: scales the incoming gradient of every op named `op` before its
  // backward closure runs. Used to build negative controls for gradient checks.
  void inject_backward_fault(std::string op, double scale);

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::string fault_op_;
  double fault_scale_ = 1.0;
};

}  // namespace egt
