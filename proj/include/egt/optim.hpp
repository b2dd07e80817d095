#pragma once

#include <limits>
#include <vector>

#include "egt/params.hpp"

namespace egt {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(const ParameterStore& params, AdamConfig cfg = {});
  // One bias-corrected update; grads follow store order.
  void step(ParameterStore& params, const std::vector<Tensor>& grads, double lr);
  std::size_t steps() const noexcept { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t t_ = 0;
};

// Halves (by `factor`) the learning rate after `patience` consecutive
// evaluations without strict improvement over the best loss so far.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor, std::size_t patience, double min_lr);
  double observe(double loss);
  double lr() const noexcept { return lr_; }
  double best() const noexcept { return best_; }
  std::size_t reductions() const noexcept { return reductions_; }

 private:
  double lr_;
  double factor_;
  std::size_t patience_;
  double min_lr_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t stale_ = 0;
  std::size_t reductions_ = 0;
};

}  // namespace egt
