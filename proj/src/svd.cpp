#include "egt/svd.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "egt/error.hpp"

namespace egt {

namespace {

double column_dot(const std::vector<double>& a, std::size_t n, std::size_t p, std::size_t q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += a[i * n + p] * a[i * n + q];
  }
  return acc;
}

void rotate_columns(std::vector<double>& a, std::size_t n, std::size_t p, std::size_t q, double c, double s) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ap = a[i * n + p];
    const double aq = a[i * n + q];
    a[i * n + p] = c * ap - s * aq;
    a[i * n + q] = s * ap + c * aq;
  }
}

// Fills column `col` of u with a unit vector orthogonal to the columns listed
// in `filled`: the canonical basis vector with the largest residual after
// projection, orthogonalised twice.
void complete_column(Tensor& u, std::size_t n, std::size_t col, const std::vector<std::size_t>& filled) {
  auto residual = [&](std::size_t basis) {
    std::vector<double> x(n, 0.0);
    x[basis] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t other : filled) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          proj += x[i] * u[i * n + other];
        }
        for (std::size_t i = 0; i < n; ++i) {
          x[i] -= proj * u[i * n + other];
        }
      }
    }
    return x;
  };
  std::vector<double> best;
  double best_norm = 0.0;
  for (std::size_t basis = 0; basis < n; ++basis) {
    std::vector<double> x = residual(basis);
    double norm = 0.0;
    for (double xi : x) {
      norm += xi * xi;
    }
    norm = std::sqrt(norm);
    if (norm > best_norm) {
      best_norm = norm;
      best = std::move(x);
    }
  }
  require(best_norm > 1e-6, "svd: could not complete an orthonormal basis");
  for (std::size_t i = 0; i < n; ++i) {
    u[i * n + col] = best[i] / best_norm;
  }
}

}  // namespace

SvdResult svd(const Tensor& m, const SvdOptions& options) {
  require(m.rank() == 2 && m.dim(0) == m.dim(1) && m.dim(0) >= 1, "svd: expected a non-empty square matrix");
  check_finite(m, "svd input");
  const std::size_t n = m.dim(0);
  std::vector<double> a(m.data().begin(), m.data().end());
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    v[i * n + i] = 1.0;
  }
  // Columns with squared norm below this are numerically zero and take no part
  // in rotations; their ratios are noise.
  const double norm_f = frobenius_norm(m);
  const double negligible = (DBL_EPSILON * norm_f) * (DBL_EPSILON * norm_f);

  double residual = 0.0;
  bool converged = false;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    residual = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = column_dot(a, n, p, p);
        const double beta = column_dot(a, n, q, q);
        if (alpha <= negligible || beta <= negligible) {
          continue;
        }
        const double gamma = column_dot(a, n, p, q);
        const double ratio = std::abs(gamma) / std::sqrt(alpha * beta);
        residual = std::max(residual, ratio);
        if (ratio <= options.tolerance * 0.1 || gamma == 0.0) {
          continue;
        }
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        rotate_columns(a, n, p, q, c, s);
        rotate_columns(v, n, p, q, c, s);
      }
    }
    if (residual < options.tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "svd: no convergence after " << options.max_sweeps << " sweeps (residual " << residual << ")";
    fail(msg.str());
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    norms[j] = std::sqrt(column_dot(a, n, j, j));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdResult result{Tensor({n, n}), Tensor({n}), Tensor({n, n})};
  // Singular values this small carry no usable direction; their left vectors
  // are rebuilt from the complement of the others.
  const double zero_sigma = std::max(1e-10 * norm_f, DBL_MIN);
  std::vector<std::size_t> filled;
  std::vector<std::size_t> deficient;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    result.sigma[k] = norms[src];
    for (std::size_t i = 0; i < n; ++i) {
      result.v[i * n + k] = v[i * n + src];
    }
    if (norms[src] > zero_sigma) {
      for (std::size_t i = 0; i < n; ++i) {
        result.u[i * n + k] = a[i * n + src] / norms[src];
      }
      filled.push_back(k);
    } else {
      deficient.push_back(k);
    }
  }
  for (std::size_t k : deficient) {
    complete_column(result.u, n, k, filled);
    filled.push_back(k);
  }
  return result;
}

Tensor svd_reconstruct(const SvdResult& result) {
  const std::size_t n = result.sigma.size();
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += result.u[i * n + k] * result.sigma[k] * result.v[j * n + k];
      }
      out[i * n + j] = acc;
    }
  }
  return out;
}

}  // namespace egt
