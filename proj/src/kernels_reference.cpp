#include <cmath>
#include <limits>

#include "egt/kernels.hpp"

// Straight-line serial versions of every kernel. They define the accumulation
// order the OpenMP kernels must reproduce.

namespace egt::kernels::reference {

void linear_forward(In x, std::size_t rows, std::size_t in, In w, std::size_t out, In bias, Out y) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) {
        acc += x[r * in + i] * w[o * in + i];
      }
      y[r * out + o] = bias.empty() ? acc : acc + bias[o];
    }
  }
}

void linear_backward_input(In dy, std::size_t rows, std::size_t out, In w, std::size_t in, Out dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) {
        acc += dy[r * out + o] * w[o * in + i];
      }
      dx[r * in + i] += acc;
    }
  }
}

void linear_backward_params(In dy, In x, std::size_t rows, std::size_t in, std::size_t out, Out dw,
                            Out dbias) {
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        acc += dy[r * out + o] * x[r * in + i];
      }
      dw[o * in + i] += acc;
    }
    if (!dbias.empty()) {
      double acc = 0.0;
      for (std::size_t r = 0; r < rows; ++r) {
        acc += dy[r * out + o];
      }
      dbias[o] += acc;
    }
  }
}

void head_scores(In q, In k, std::size_t batch, std::size_t n, std::size_t heads, std::size_t width,
                 double scale, Out s) {
  const std::size_t stride = heads * width;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < width; ++c) {
            acc += q[(b * n + i) * stride + h * width + c] * k[(b * n + j) * stride + h * width + c];
          }
          s[((b * heads + h) * n + i) * n + j] = scale * acc;
        }
      }
    }
  }
}

void head_scores_backward(In ds, In q, In k, std::size_t batch, std::size_t n, std::size_t heads,
                          std::size_t width, double scale, Out dq, Out dk) {
  const std::size_t stride = heads * width;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < width; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            acc += ds[((b * heads + h) * n + i) * n + j] * k[(b * n + j) * stride + h * width + c];
          }
          dq[(b * n + i) * stride + h * width + c] += scale * acc;
        }
      }
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = 0; c < width; ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            acc += ds[((b * heads + h) * n + i) * n + j] * q[(b * n + i) * stride + h * width + c];
          }
          dk[(b * n + j) * stride + h * width + c] += scale * acc;
        }
      }
    }
  }
}

void attend(In w, In v, std::size_t batch, std::size_t n, std::size_t heads, std::size_t width, Out y) {
  const std::size_t stride = heads * width;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t h = 0; h < heads; ++h) {
        for (std::size_t c = 0; c < width; ++c) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            acc += w[((b * heads + h) * n + i) * n + j] * v[(b * n + j) * stride + h * width + c];
          }
          y[(b * n + i) * stride + h * width + c] = acc;
        }
      }
    }
  }
}

void attend_backward(In dy, In w, In v, std::size_t batch, std::size_t n, std::size_t heads,
                     std::size_t width, Out dw, Out dv) {
  const std::size_t stride = heads * width;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < width; ++c) {
            acc += dy[(b * n + i) * stride + h * width + c] * v[(b * n + j) * stride + h * width + c];
          }
          dw[((b * heads + h) * n + i) * n + j] += acc;
        }
      }
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t c = 0; c < width; ++c) {
          double acc = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            acc += w[((b * heads + h) * n + i) * n + j] * dy[(b * n + i) * stride + h * width + c];
          }
          dv[(b * n + j) * stride + h * width + c] += acc;
        }
      }
    }
  }
}

void layer_norm_forward(In x, std::size_t rows, std::size_t d, In gain, In bias, double eps, Out y,
                        Out mean, Out rstd) {
  for (std::size_t r = 0; r < rows; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      sum += x[r * d + c];
    }
    const double mu = sum / static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double centered = x[r * d + c] - mu;
      var += centered * centered;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      y[r * d + c] = gain[c] * ((x[r * d + c] - mu) * inv) + bias[c];
    }
    mean[r] = mu;
    rstd[r] = inv;
  }
}

void layer_norm_backward(In dy, In x, In mean, In rstd, In gain, std::size_t rows, std::size_t d, Out dx,
                         Out dgain, Out dbias) {
  const double inv_d = 1.0 / static_cast<double>(d);
  for (std::size_t r = 0; r < rows; ++r) {
    double g_sum = 0.0;
    double gx_sum = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double xhat = (x[r * d + c] - mean[r]) * rstd[r];
      const double g = dy[r * d + c] * gain[c];
      g_sum += g;
      gx_sum += g * xhat;
    }
    for (std::size_t c = 0; c < d; ++c) {
      const double xhat = (x[r * d + c] - mean[r]) * rstd[r];
      const double g = dy[r * d + c] * gain[c];
      dx[r * d + c] += rstd[r] * (g - g_sum * inv_d - xhat * (gx_sum * inv_d));
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
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

std::size_t masked_softmax_forward(In x, MaskIn mask, std::size_t rows, std::size_t n, Out y) {
  std::size_t empty_rows = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (mask[r * n + j] && x[r * n + j] > peak) {
        peak = x[r * n + j];
      }
    }
    if (peak == -std::numeric_limits<double>::infinity()) {
      ++empty_rows;
      for (std::size_t j = 0; j < n; ++j) {
        y[r * n + j] = 0.0;
      }
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = mask[r * n + j] ? std::exp(x[r * n + j] - peak) : 0.0;
      y[r * n + j] = e;
      total += e;
    }
    for (std::size_t j = 0; j < n; ++j) {
      y[r * n + j] /= total;
    }
  }
  return empty_rows;
}

void masked_softmax_backward(In dy, In y, std::size_t rows, std::size_t n, Out dx) {
  for (std::size_t r = 0; r < rows; ++r) {
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      dot += dy[r * n + j] * y[r * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) {
      dx[r * n + j] += y[r * n + j] * (dy[r * n + j] - dot);
    }
  }
}

}  // namespace egt::kernels::reference
