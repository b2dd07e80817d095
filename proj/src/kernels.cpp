#include "egt/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <vector>

namespace egt::kernels {

namespace {

using Index = std::int64_t;

int& configured_threads() {
  static int threads = [] {
    if (const char* env = std::getenv("EGT_NUM_THREADS")) {
      const int requested = std::atoi(env);
      if (requested > 0) {
        return requested;
      }
    }
    return omp_get_max_threads();
  }();
  return threads;
}

}  // namespace

int thread_count() { return configured_threads(); }

void set_thread_count(int threads) { configured_threads() = threads > 0 ? threads : omp_get_max_threads(); }

void linear_forward(In x, std::size_t rows, std::size_t in, In w, std::size_t out, In bias, Out y) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index r = 0; r < static_cast<Index>(rows); ++r) {
    const double* xr = x.data() + r * in;
    double* yr = y.data() + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w.data() + o * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) {
        acc += xr[i] * wo[i];
      }
      yr[o] = bias.empty() ? acc : acc + bias[o];
    }
  }
}

void linear_backward_input(In dy, std::size_t rows, std::size_t out, In w, std::size_t in, Out dx) {
#pragma omp parallel num_threads(thread_count())
  {
    std::vector<double> acc(in);
#pragma omp for schedule(static)
    for (Index r = 0; r < static_cast<Index>(rows); ++r) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const double* dyr = dy.data() + r * out;
      for (std::size_t o = 0; o < out; ++o) {
        const double g = dyr[o];
        const double* wo = w.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) {
          acc[i] += g * wo[i];
        }
      }
      double* dxr = dx.data() + r * in;
      for (std::size_t i = 0; i < in; ++i) {
        dxr[i] += acc[i];
      }
    }
  }
}

void linear_backward_params(In dy, In x, std::size_t rows, std::size_t in, std::size_t out, Out dw,
                            Out dbias) {
#pragma omp parallel num_threads(thread_count())
  {
    std::vector<double> acc(in);
#pragma omp for schedule(static)
    for (Index o = 0; o < static_cast<Index>(out); ++o) {
      std::fill(acc.begin(), acc.end(), 0.0);
      double bias_acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double g = dy[r * out + o];
        const double* xr = x.data() + r * in;
        for (std::size_t i = 0; i < in; ++i) {
          acc[i] += g * xr[i];
        }
        bias_acc += g;
      }
      double* dwo = dw.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        dwo[i] += acc[i];
      }
      if (!dbias.empty()) {
        dbias[o] += bias_acc;
      }
    }
  }
}

void head_scores(In q, In k, std::size_t batch, std::size_t n, std::size_t heads, std::size_t width,
                 double scale, Out s) {
  const std::size_t stride = heads * width;
  const auto total = static_cast<Index>(batch * heads * n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index row = 0; row < total; ++row) {
    const std::size_t i = row % n;
    const std::size_t h = (row / n) % heads;
    const std::size_t b = row / (n * heads);
    const double* qi = q.data() + (b * n + i) * stride + h * width;
    double* srow = s.data() + row * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* kj = k.data() + (b * n + j) * stride + h * width;
      double acc = 0.0;
      for (std::size_t c = 0; c < width; ++c) {
        acc += qi[c] * kj[c];
      }
      srow[j] = scale * acc;
    }
  }
}

void head_scores_backward(In ds, In q, In k, std::size_t batch, std::size_t n, std::size_t heads,
                          std::size_t width, double scale, Out dq, Out dk) {
  const std::size_t stride = heads * width;
  const auto nodes = static_cast<Index>(batch * n);
#pragma omp parallel num_threads(thread_count())
  {
    std::vector<double> acc(width);
#pragma omp for schedule(static)
    for (Index node = 0; node < nodes; ++node) {
      const std::size_t b = node / n;
      const std::size_t i = node % n;
      for (std::size_t h = 0; h < heads; ++h) {
        std::fill(acc.begin(), acc.end(), 0.0);
        const double* dsrow = ds.data() + ((b * heads + h) * n + i) * n;
        for (std::size_t j = 0; j < n; ++j) {
          const double g = dsrow[j];
          const double* kj = k.data() + (b * n + j) * stride + h * width;
          for (std::size_t c = 0; c < width; ++c) {
            acc[c] += g * kj[c];
          }
        }
        double* dqi = dq.data() + (b * n + i) * stride + h * width;
        for (std::size_t c = 0; c < width; ++c) {
          dqi[c] += scale * acc[c];
        }
      }
    }
#pragma omp for schedule(static)
    for (Index node = 0; node < nodes; ++node) {
      const std::size_t b = node / n;
      const std::size_t j = node % n;
      for (std::size_t h = 0; h < heads; ++h) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const double g = ds[((b * heads + h) * n + i) * n + j];
          const double* qi = q.data() + (b * n + i) * stride + h * width;
          for (std::size_t c = 0; c < width; ++c) {
            acc[c] += g * qi[c];
          }
        }
        double* dkj = dk.data() + (b * n + j) * stride + h * width;
        for (std::size_t c = 0; c < width; ++c) {
          dkj[c] += scale * acc[c];
        }
      }
    }
  }
}

void attend(In w, In v, std::size_t batch, std::size_t n, std::size_t heads, std::size_t width, Out y) {
  const std::size_t stride = heads * width;
  const auto nodes = static_cast<Index>(batch * n);
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index node = 0; node < nodes; ++node) {
    const std::size_t b = node / n;
    const std::size_t i = node % n;
    double* yi = y.data() + node * stride;
    for (std::size_t h = 0; h < heads; ++h) {
      double* out = yi + h * width;
      for (std::size_t c = 0; c < width; ++c) {
        out[c] = 0.0;
      }
      const double* wrow = w.data() + ((b * heads + h) * n + i) * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double a = wrow[j];
        const double* vj = v.data() + (b * n + j) * stride + h * width;
        for (std::size_t c = 0; c < width; ++c) {
          out[c] += a * vj[c];
        }
      }
    }
  }
}

void attend_backward(In dy, In w, In v, std::size_t batch, std::size_t n, std::size_t heads,
                     std::size_t width, Out dw, Out dv) {
  const std::size_t stride = heads * width;
  const auto rows = static_cast<Index>(batch * heads * n);
  const auto nodes = static_cast<Index>(batch * n);
#pragma omp parallel num_threads(thread_count())
  {
#pragma omp for schedule(static)
    for (Index row = 0; row < rows; ++row) {
      const std::size_t i = row % n;
      const std::size_t h = (row / n) % heads;
      const std::size_t b = row / (n * heads);
      const double* dyi = dy.data() + (b * n + i) * stride + h * width;
      double* dwrow = dw.data() + row * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* vj = v.data() + (b * n + j) * stride + h * width;
        double acc = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
          acc += dyi[c] * vj[c];
        }
        dwrow[j] += acc;
      }
    }
    std::vector<double> acc(width);
#pragma omp for schedule(static)
    for (Index node = 0; node < nodes; ++node) {
      const std::size_t b = node / n;
      const std::size_t j = node % n;
      for (std::size_t h = 0; h < heads; ++h) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          const double a = w[((b * heads + h) * n + i) * n + j];
          const double* dyi = dy.data() + (b * n + i) * stride + h * width;
          for (std::size_t c = 0; c < width; ++c) {
            acc[c] += a * dyi[c];
          }
        }
        double* dvj = dv.data() + node * stride + h * width;
        for (std::size_t c = 0; c < width; ++c) {
          dvj[c] += acc[c];
        }
      }
    }
  }
}

void layer_norm_forward(In x, std::size_t rows, std::size_t d, In gain, In bias, double eps, Out y,
                        Out mean, Out rstd) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index r = 0; r < static_cast<Index>(rows); ++r) {
    const double* xr = x.data() + r * d;
    double sum = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      sum += xr[c];
    }
    const double mu = sum / static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double centered = xr[c] - mu;
      var += centered * centered;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    double* yr = y.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      yr[c] = gain[c] * ((xr[c] - mu) * inv) + bias[c];
    }
    mean[r] = mu;
    rstd[r] = inv;
  }
}

void layer_norm_backward(In dy, In x, In mean, In rstd, In gain, std::size_t rows, std::size_t d, Out dx,
                         Out dgain, Out dbias) {
  const double inv_d = 1.0 / static_cast<double>(d);
#pragma omp parallel num_threads(thread_count())
  {
#pragma omp for schedule(static)
    for (Index r = 0; r < static_cast<Index>(rows); ++r) {
      const double* xr = x.data() + r * d;
      const double* dyr = dy.data() + r * d;
      double g_sum = 0.0;
      double gx_sum = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double xhat = (xr[c] - mean[r]) * rstd[r];
        const double g = dyr[c] * gain[c];
        g_sum += g;
        gx_sum += g * xhat;
      }
      double* dxr = dx.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) {
        const double xhat = (xr[c] - mean[r]) * rstd[r];
        const double g = dyr[c] * gain[c];
        dxr[c] += rstd[r] * (g - g_sum * inv_d - xhat * (gx_sum * inv_d));
      }
    }
#pragma omp for schedule(static)
    for (Index c = 0; c < static_cast<Index>(d); ++c) {
      double acc_gain = 0.0;
      double acc_bias = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        const double xhat = (x[r * d + c] - mean[r]) * rstd[r];
        acc_gain += dy[r * d + c] * xhat;
        acc_bias += dy[r * d + c];
      }
      dgain[c] += acc_gain;
      dbias[c] += acc_bias;
    }
  }
}

std::size_t masked_softmax_forward(In x, MaskIn mask, std::size_t rows, std::size_t n, Out y) {
  std::size_t empty_rows = 0;
#pragma omp parallel for schedule(static) reduction(+ : empty_rows) num_threads(thread_count())
  for (Index r = 0; r < static_cast<Index>(rows); ++r) {
    const double* xr = x.data() + r * n;
    const std::uint8_t* mr = mask.data() + r * n;
    double* yr = y.data() + r * n;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (mr[j] && xr[j] > peak) {
        peak = xr[j];
      }
    }
    if (peak == -std::numeric_limits<double>::infinity()) {
      ++empty_rows;
      for (std::size_t j = 0; j < n; ++j) {
        yr[j] = 0.0;
      }
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = mr[j] ? std::exp(xr[j] - peak) : 0.0;
      yr[j] = e;
      total += e;
    }
    for (std::size_t j = 0; j < n; ++j) {
      yr[j] /= total;
    }
  }
  return empty_rows;
}

void masked_softmax_backward(In dy, In y, std::size_t rows, std::size_t n, Out dx) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
  for (Index r = 0; r < static_cast<Index>(rows); ++r) {
    const double* dyr = dy.data() + r * n;
    const double* yr = y.data() + r * n;
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dot += dyr[j] * yr[j];
    }
    double* dxr = dx.data() + r * n;
    for (std::size_t j = 0; j < n; ++j) {
      dxr[j] += yr[j] * (dyr[j] - dot);
    }
  }
}

}  // namespace egt::kernels
