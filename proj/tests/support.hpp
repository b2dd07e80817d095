#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "egt/gradcheck.hpp"
#include "egt/ops.hpp"
#include "egt/rng.hpp"
#include "egt/tape.hpp"
#include "egt/tensor.hpp"

namespace egt::test {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (double& v : t.data()) {
    v = rng.uniform(lo, hi);
  }
  return t;
}

inline double frobenius_diff(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return std::sqrt(acc);
}

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Largest relative error, over all inputs, between the tape gradient of
// sum(r * build(inputs)) and central differences of the same scalar.
inline double op_gradient_error(const std::vector<Tensor>& inputs, const Builder& build, std::uint64_t seed = 99) {
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor& t : inputs) {
    vars.push_back(tape.parameter(t));
  }
  const Var out = build(tape, vars);
  const Tensor weights = random_tensor(tape.value(out).shape(), seed);
  tape.backward(ops::sum(tape, ops::mul(tape, out, tape.constant(weights))));

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto f = [&](const Tensor& x) {
      Tape t;
      std::vector<Var> vs;
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        vs.push_back(t.constant(j == i ? x : inputs[j]));
      }
      const Tensor& y = t.value(build(t, vs));
      double acc = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) {
        acc += y[k] * weights[k];
      }
      return acc;
    };
    worst = std::max(worst, relative_error(tape.grad(vars[i]), finite_diff_grad(f, inputs[i], 1e-5)));
  }
  return worst;
}

inline Mask random_mask(Shape shape, std::uint64_t seed, double p_true = 0.7) {
  Rng rng(seed);
  Mask m(std::move(shape));
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.set(i, rng.bernoulli(p_true));
  }
  return m;
}

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Tensor vectors;              // columns match values
};

// Cyclic Jacobi rotations on a symmetric matrix.
inline SymmetricEigen symmetric_eigen(const Tensor& m) {
  const std::size_t n = m.dim(0);
  Tensor a = m;
  Tensor v({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    v.at({i, i}) = 1.0;
  }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        off += a.at({p, q}) * a.at({p, q});
      }
    }
    if (off < 1e-30) {
      break;
    }
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at({p, q});
        if (apq == 0.0) {
          continue;
        }
        const double theta = (a.at({q, q}) - a.at({p, p})) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at({k, p}), akq = a.at({k, q});
          a.at({k, p}) = c * akp - s * akq;
          a.at({k, q}) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at({p, k}), aqk = a.at({q, k});
          a.at({p, k}) = c * apk - s * aqk;
          a.at({q, k}) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v.at({k, p}), vkq = v.at({k, q});
          v.at({k, p}) = c * vkp - s * vkq;
          v.at({k, q}) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a.at({x, x}) < a.at({y, y}); });
  SymmetricEigen out{std::vector<double>(n), Tensor({n, n})};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a.at({order[c], order[c]});
    for (std::size_t k = 0; k < n; ++k) {
      out.vectors.at({k, c}) = v.at({k, order[c]});
    }
  }
  return out;
}

}  // namespace egt::test
