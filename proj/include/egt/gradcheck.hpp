#pragma once

#include <functional>

#include "egt/tensor.hpp"

namespace egt {

using ScalarFunction = std::function<double(const Tensor&)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
// Throws if f returns a non-finite value.
Tensor finite_diff_grad(const ScalarFunction& f, const Tensor& x, double h = 1e-5);

// max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|, floor). Zero when both
// tensors are (near) zero.
double relative_error(const Tensor& analytic, const Tensor& numeric, double floor = 1e-8);

}  // namespace egt
