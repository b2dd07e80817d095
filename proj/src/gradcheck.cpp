#include "egt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "egt/error.hpp"

namespace egt {

Tensor finite_diff_grad(const ScalarFunction& f, const Tensor& x, double h) {
  require(h > 0.0, "finite_diff_grad: step must be positive");
  Tensor probe = x;
  Tensor grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + h;
    const double plus = f(probe);
    probe[i] = original - h;
    const double minus = f(probe);
    probe[i] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      fail("finite_diff_grad: non-finite evaluation at coordinate " + std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double relative_error(const Tensor& analytic, const Tensor& numeric, double floor) {
  const double scale = std::max({max_abs(analytic), max_abs(numeric), floor});
  return max_abs_diff(analytic, numeric) / scale;
}

}  // namespace egt
