#include "egt/optim.hpp"

#include <algorithm>
#include <cmath>

#include "egt/error.hpp"

namespace egt {

Adam::Adam(const ParameterStore& params, AdamConfig cfg) : cfg_(cfg) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params.at(i).shape());
    v_.emplace_back(params.at(i).shape());
  }
}

void Adam::step(ParameterStore& params, const std::vector<Tensor>& grads, double lr) {
  require(grads.size() == params.size() && m_.size() == params.size(), "adam: gradient count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& w = params.at(p);
    const Tensor& g = grads[p];
    require(g.shape() == w.shape(), "adam: gradient shape mismatch for '" + params.name(p) + "'");
    Tensor& m = m_[p];
    Tensor& v = v_[p];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

PlateauScheduler::PlateauScheduler(double lr, double factor, std::size_t patience, double min_lr)
    : lr_(lr), factor_(factor), patience_(patience), min_lr_(min_lr) {
  require(factor > 0.0 && factor < 1.0, "scheduler: factor must lie in (0, 1)");
  require(patience >= 1, "scheduler: patience must be at least 1");
  require(min_lr >= 0.0 && lr >= min_lr, "scheduler: need 0 <= min_lr <= lr");
}

double PlateauScheduler::observe(double loss) {
  if (loss < best_) {
    best_ = loss;
    stale_ = 0;
    return lr_;
  }
  if (++stale_ >= patience_) {
    stale_ = 0;
    const double next = std::max(min_lr_, lr_ * factor_);
    if (next < lr_) {
      lr_ = next;
      ++reductions_;
    }
  }
  return lr_;
}

}  // namespace egt
