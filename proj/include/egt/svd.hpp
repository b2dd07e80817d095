#pragma once

#include <cstddef>

#include "egt/tensor.hpp"

namespace egt {

// M = U diag(sigma) V^T with orthogonal U, V (columns are singular vectors)
// and sigma sorted nonincreasing.
struct SvdResult {
  Tensor u;      // [n, n]
  Tensor sigma;  // [n]
  Tensor v;      // [n, n]
};

struct SvdOptions {
  double tolerance = 1e-12;  // max |<a_p, a_q>| / (|a_p| |a_q|) at convergence
  int max_sweeps = 60;
};

// One-sided (Hestenes) Jacobi SVD of a square matrix with cyclic sweeps.
// Deterministic; throws egt::Error reporting the residual on non-convergence.
SvdResult svd(const Tensor& m, const SvdOptions& options = {});

// U diag(sigma) V^T, for tests and reconstruction checks.
Tensor svd_reconstruct(const SvdResult& result);

}  // namespace egt
