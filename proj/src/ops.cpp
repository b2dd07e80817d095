#include "egt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "egt/error.hpp"
#include "egt/kernels.hpp"

namespace egt::ops {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                                      " vs " + shape_to_string(b.shape()));
}

Shape leading(const Shape& shape) { return Shape(shape.begin(), shape.end() - 1); }

}  // namespace

Var add(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += bv[i];
  }
  return tape.record("add", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g, const Tensor&) {
    for (Var x : {a, b}) {
      if (t.requires_grad(x)) {
        Tensor& gx = t.grad_for(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
          gx[i] += g[i];
        }
      }
    }
  });
}

Var mul(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] *= bv[i];
  }
  return tape.record("mul", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g, const Tensor&) {
    if (t.requires_grad(a)) {
      const Tensor& bv = t.value(b);
      Tensor& ga = t.grad_for(a);
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * bv[i];
      }
    }
    if (t.requires_grad(b)) {
      const Tensor& av = t.value(a);
      Tensor& gb = t.grad_for(b);
      for (std::size_t i = 0; i < g.size(); ++i) {
        gb[i] += g[i] * av[i];
      }
    }
  });
}

Var scale(Tape& tape, Var a, double factor) {
  Tensor out = tape.value(a);
  for (double& v : out.data()) {
    v *= factor;
  }
  return tape.record("scale", std::move(out), {a}, [a, factor](Tape& t, const Tensor& g, const Tensor&) {
    Tensor& ga = t.grad_for(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * factor;
    }
  });
}

Var sum(Tape& tape, Var a) {
  const Tensor& av = tape.value(a);
  double total = 0.0;
  for (double v : av.data()) {
    total += v;
  }
  return tape.record("sum", Tensor::scalar(total), {a}, [a](Tape& t, const Tensor& g, const Tensor&) {
    Tensor& ga = t.grad_for(a);
    for (double& v : ga.data()) {
      v += g[0];
    }
  });
}

Var linear(Tape& tape, Var x, Var weight, std::optional<Var> bias) {
  const Tensor& xv = tape.value(x);
  const Tensor& wv = tape.value(weight);
  require(wv.rank() == 2, "linear: weight must be a matrix");
  const std::size_t in = wv.dim(1);
  const std::size_t out_dim = wv.dim(0);
  require(xv.rank() >= 1 && xv.last_dim() == in,
          "linear: input " + shape_to_string(xv.shape()) + " incompatible with weight " +
              shape_to_string(wv.shape()));
  if (bias) {
    require(tape.value(*bias).size() == out_dim, "linear: bias length mismatch");
  }
  Shape out_shape = leading(xv.shape());
  out_shape.push_back(out_dim);
  Tensor out(out_shape);
  const std::size_t rows = xv.rows();
  const std::span<const double> bias_span =
      bias ? tape.value(*bias).data() : std::span<const double>{};
  kernels::linear_forward(xv.data(), rows, in, wv.data(), out_dim, bias_span, out.data());

  if (bias) {
    const Var b = *bias;
    return tape.record("linear", std::move(out), {x, weight, b},
                       [x, weight, b, rows, in, out_dim](Tape& t, const Tensor& g, const Tensor&) {
                         if (t.requires_grad(x)) {
                           kernels::linear_backward_input(g.data(), rows, out_dim, t.value(weight).data(), in,
                                                          t.grad_for(x).data());
                         }
                         if (t.requires_grad(weight) || t.requires_grad(b)) {
                           Tensor& gw = t.grad_for(weight);
                           Tensor& gb = t.grad_for(b);
                           kernels::linear_backward_params(g.data(), t.value(x).data(), rows, in, out_dim,
                                                           gw.data(), gb.data());
                         }
                       });
  }
  return tape.record("linear", std::move(out), {x, weight},
                     [x, weight, rows, in, out_dim](Tape& t, const Tensor& g, const Tensor&) {
                       if (t.requires_grad(x)) {
                         kernels::linear_backward_input(g.data(), rows, out_dim, t.value(weight).data(), in,
                                                        t.grad_for(x).data());
                       }
                       if (t.requires_grad(weight)) {
                         kernels::linear_backward_params(g.data(), t.value(x).data(), rows, in, out_dim,
                                                         t.grad_for(weight).data(), {});
                       }
                     });
}

Var layer_norm(Tape& tape, Var x, Var gain, Var bias, double eps) {
  require(eps > 0.0, "layer_norm: eps must be positive");
  const Tensor& xv = tape.value(x);
  const std::size_t d = xv.last_dim();
  require(d >= 1, "layer_norm: empty trailing axis");
  require(tape.value(gain).size() == d && tape.value(bias).size() == d, "layer_norm: gain/bias length mismatch");
  check_finite(xv, "layer_norm input");
  const std::size_t rows = xv.rows();
  Tensor out(xv.shape());
  std::vector<double> mean(rows);
  std::vector<double> rstd(rows);
  kernels::layer_norm_forward(xv.data(), rows, d, tape.value(gain).data(), tape.value(bias).data(), eps,
                              out.data(), mean, rstd);
  return tape.record("layer_norm", std::move(out), {x, gain, bias},
                     [x, gain, bias, rows, d, mean = std::move(mean), rstd = std::move(rstd)](
                         Tape& t, const Tensor& g, const Tensor&) {
                       Tensor scratch_dx;
                       std::span<double> dx;
                       if (t.requires_grad(x)) {
                         dx = t.grad_for(x).data();
                       } else {
                         scratch_dx = Tensor(t.value(x).shape());
                         dx = scratch_dx.data();
                       }
                       Tensor& dgain = t.grad_for(gain);
                       Tensor& dbias = t.grad_for(bias);
                       kernels::layer_norm_backward(g.data(), t.value(x).data(), mean, rstd, t.value(gain).data(),
                                                    rows, d, dx, dgain.data(), dbias.data());
                     });
}

Var elu(Tape& tape, Var x) {
  Tensor out = tape.value(x);
  for (double& v : out.data()) {
    v = v >= 0.0 ? v : std::expm1(v);
  }
  return tape.record("elu", std::move(out), {x}, [x](Tape& t, const Tensor& g, const Tensor& y) {
    Tensor& gx = t.grad_for(x);
    const Tensor& xv = t.value(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx[i] += g[i] * (xv[i] >= 0.0 ? 1.0 : y[i] + 1.0);
    }
  });
}

Var sigmoid(Tape& tape, Var x) {
  Tensor out = tape.value(x);
  for (double& v : out.data()) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return tape.record("sigmoid", std::move(out), {x}, [x](Tape& t, const Tensor& g, const Tensor& y) {
    Tensor& gx = t.grad_for(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gx[i] += g[i] * y[i] * (1.0 - y[i]);
    }
  });
}

Var clip(Tape& tape, Var x, double lo, double hi) {
  require(lo < hi, "clip: lower bound must be below upper bound");
  Tensor out = tape.value(x);
  for (double& v : out.data()) {
    v = std::min(hi, std::max(lo, v));
  }
  return tape.record("clip", std::move(out), {x}, [x, lo, hi](Tape& t, const Tensor& g, const Tensor&) {
    Tensor& gx = t.grad_for(x);
    const Tensor& xv = t.value(x);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > lo && xv[i] < hi) {
        gx[i] += g[i];
      }
    }
  });
}

Var masked_softmax(Tape& tape, Var x, const Mask& mask, bool allow_empty_rows) {
  const Tensor& xv = tape.value(x);
  require(mask.shape() == xv.shape(), "masked_softmax: mask shape " + shape_to_string(mask.shape()) +
                                          " does not match logits " + shape_to_string(xv.shape()));
  const std::size_t n = xv.last_dim();
  const std::size_t rows = xv.rows();
  Tensor out(xv.shape());
  const std::size_t empty = kernels::masked_softmax_forward(xv.data(), mask.data(), rows, n, out.data());
  if (empty > 0 && !allow_empty_rows) {
    fail("masked_softmax: " + std::to_string(empty) + " row(s) have no unmasked entry");
  }
  return tape.record("masked_softmax", std::move(out), {x}, [x, rows, n](Tape& t, const Tensor& g, const Tensor& y) {
    kernels::masked_softmax_backward(g.data(), y.data(), rows, n, t.grad_for(x).data());
  });
}

Var apply_mask(Tape& tape, Var x, const Mask& mask) {
  const Tensor& xv = tape.value(x);
  require(mask.size() > 0 && xv.size() % mask.size() == 0, "apply_mask: mask does not tile the input");
  const Shape& xs = xv.shape();
  require(mask.shape().size() <= xs.size() &&
              std::equal(mask.shape().begin(), mask.shape().end(), xs.begin()),
          "apply_mask: mask shape " + shape_to_string(mask.shape()) + " is not a prefix of " +
              shape_to_string(xs));
  const std::size_t inner = xv.size() / mask.size();
  Tensor out = xv;
  for (std::size_t m = 0; m < mask.size(); ++m) {
    if (!mask[m]) {
      std::fill_n(out.data().begin() + static_cast<std::ptrdiff_t>(m * inner), inner, 0.0);
    }
  }
  return tape.record("apply_mask", std::move(out), {x}, [x, mask, inner](Tape& t, const Tensor& g, const Tensor&) {
    Tensor& gx = t.grad_for(x);
    for (std::size_t m = 0; m < mask.size(); ++m) {
      if (mask[m]) {
        for (std::size_t c = 0; c < inner; ++c) {
          gx[m * inner + c] += g[m * inner + c];
        }
      }
    }
  });
}

Var embedding(Tape& tape, Var table, std::span<const int> ids, const Shape& ids_shape) {
  const Tensor& tv = tape.value(table);
  require(tv.rank() == 2, "embedding: table must be a matrix");
  require(shape_size(ids_shape) == ids.size(), "embedding: ids do not match ids_shape");
  const std::size_t rows = tv.dim(0);
  const std::size_t d = tv.dim(1);
  Shape out_shape = ids_shape;
  out_shape.push_back(d);
  Tensor out(out_shape);
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const int id = ids[p];
    require(id >= 0 && static_cast<std::size_t>(id) < rows,
            "embedding: id " + std::to_string(id) + " outside vocabulary of " + std::to_string(rows));
    std::copy_n(tv.data().begin() + static_cast<std::ptrdiff_t>(id * d), d,
                out.data().begin() + static_cast<std::ptrdiff_t>(p * d));
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return tape.record("embedding", std::move(out), {table},
                     [table, d, saved = std::move(saved)](Tape& t, const Tensor& g, const Tensor&) {
                       Tensor& gt = t.grad_for(table);
                       for (std::size_t p = 0; p < saved.size(); ++p) {
                         const auto row = static_cast<std::size_t>(saved[p]);
                         for (std::size_t c = 0; c < d; ++c) {
                           gt[row * d + c] += g[p * d + c];
                         }
                       }
                     });
}

Var masked_broadcast(Tape& tape, Var vec, const Mask& mask) {
  const Tensor& vv = tape.value(vec);
  const std::size_t d = vv.size();
  Shape out_shape = mask.shape();
  out_shape.push_back(d);
  Tensor out(out_shape);
  for (std::size_t m = 0; m < mask.size(); ++m) {
    if (mask[m]) {
      std::copy_n(vv.data().begin(), d, out.data().begin() + static_cast<std::ptrdiff_t>(m * d));
    }
  }
  return tape.record("masked_broadcast", std::move(out), {vec}, [vec, mask, d](Tape& t, const Tensor& g, const Tensor&) {
    Tensor& gv = t.grad_for(vec);
    for (std::size_t m = 0; m < mask.size(); ++m) {
      if (mask[m]) {
        for (std::size_t c = 0; c < d; ++c) {
          gv[c] += g[m * d + c];
        }
      }
    }
  });
}

namespace {

// Maps each flat output index to its flat input index for a permutation.
std::vector<std::size_t> permutation_gather(const Shape& in_shape, const std::vector<std::size_t>& axes) {
  const std::size_t rank = in_shape.size();
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t a = rank; a-- > 1;) {
    in_strides[a - 1] = in_strides[a] * in_shape[a];
  }
  Shape out_shape(rank);
  for (std::size_t a = 0; a < rank; ++a) {
    out_shape[a] = in_shape[axes[a]];
  }
  const std::size_t total = shape_size(in_shape);
  std::vector<std::size_t> gather(total);
  std::vector<std::size_t> index(rank, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t src = 0;
    for (std::size_t a = 0; a < rank; ++a) {
      src += index[a] * in_strides[axes[a]];
    }
    gather[flat] = src;
    for (std::size_t a = rank; a-- > 0;) {
      if (++index[a] < out_shape[a]) {
        break;
      }
      index[a] = 0;
    }
  }
  return gather;
}

}  // namespace

Var permute(Tape& tape, Var x, const std::vector<std::size_t>& axes) {
  const Tensor& xv = tape.value(x);
  const std::size_t rank = xv.rank();
  require(axes.size() == rank, "permute: axes rank mismatch");
  std::vector<std::size_t> sorted = axes;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t a = 0; a < rank; ++a) {
    require(sorted[a] == a, "permute: axes are not a permutation");
  }
  Shape out_shape(rank);
  for (std::size_t a = 0; a < rank; ++a) {
    out_shape[a] = xv.dim(axes[a]);
  }
  std::vector<std::size_t> gather = permutation_gather(xv.shape(), axes);
  Tensor out(out_shape);
  for (std::size_t i = 0; i < gather.size(); ++i) {
    out[i] = xv[gather[i]];
  }
  return tape.record("permute", std::move(out), {x}, [x, gather = std::move(gather)](Tape& t, const Tensor& g, const Tensor&) {
    Tensor& gx = t.grad_for(x);
    for (std::size_t i = 0; i < gather.size(); ++i) {
      gx[gather[i]] += g[i];
    }
  });
}

Var head_scores(Tape& tape, Var q, Var k, std::size_t heads, double scale) {
  const Tensor& qv = tape.value(q);
  const Tensor& kv = tape.value(k);
  require_same_shape(qv, kv, "head_scores");
  require(qv.rank() == 3 && heads > 0 && qv.dim(2) % heads == 0, "head_scores: expected [b, n, heads*width]");
  const std::size_t b = qv.dim(0), n = qv.dim(1), width = qv.dim(2) / heads;
  Tensor out({b, heads, n, n});
  kernels::head_scores(qv.data(), kv.data(), b, n, heads, width, scale, out.data());
  return tape.record("head_scores", std::move(out), {q, k},
                     [q, k, b, n, heads, width, scale](Tape& t, const Tensor& g, const Tensor&) {
                       Tensor scratch_q;
                       Tensor scratch_k;
                       std::span<double> dq;
                       std::span<double> dk;
                       if (t.requires_grad(q)) {
                         dq = t.grad_for(q).data();
                       } else {
                         scratch_q = Tensor(t.value(q).shape());
                         dq = scratch_q.data();
                       }
                       if (t.requires_grad(k)) {
                         dk = t.grad_for(k).data();
                       } else {
                         scratch_k = Tensor(t.value(k).shape());
                         dk = scratch_k.data();
                       }
                       kernels::head_scores_backward(g.data(), t.value(q).data(), t.value(k).data(), b, n, heads,
                                                     width, scale, dq, dk);
                     });
}

Var attend(Tape& tape, Var w, Var v, std::size_t heads) {
  const Tensor& wv = tape.value(w);
  const Tensor& vv = tape.value(v);
  require(vv.rank() == 3 && heads > 0 && vv.dim(2) % heads == 0, "attend: expected values [b, n, heads*width]");
  const std::size_t b = vv.dim(0), n = vv.dim(1), width = vv.dim(2) / heads;
  require(wv.shape() == Shape({b, heads, n, n}), "attend: weights shape " + shape_to_string(wv.shape()));
  Tensor out(vv.shape());
  kernels::attend(wv.data(), vv.data(), b, n, heads, width, out.data());
  return tape.record("attend", std::move(out), {w, v}, [w, v, b, n, heads, width](Tape& t, const Tensor& g, const Tensor&) {
    Tensor scratch_w;
    Tensor scratch_v;
    std::span<double> dw;
    std::span<double> dv;
    if (t.requires_grad(w)) {
      dw = t.grad_for(w).data();
    } else {
      scratch_w = Tensor(t.value(w).shape());
      dw = scratch_w.data();
    }
    if (t.requires_grad(v)) {
      dv = t.grad_for(v).data();
    } else {
      scratch_v = Tensor(t.value(v).shape());
      dv = scratch_v.data();
    }
    kernels::attend_backward(g.data(), t.value(w).data(), t.value(v).data(), b, n, heads, width, dw, dv);
  });
}

Var masked_mean(Tape& tape, Var h, const Mask& node_mask) {
  const Tensor& hv = tape.value(h);
  require(hv.rank() == 3 && node_mask.shape() == Shape({hv.dim(0), hv.dim(1)}), "masked_mean: shape mismatch");
  const std::size_t b = hv.dim(0), n = hv.dim(1), d = hv.dim(2);
  Tensor out({b, d});
  std::vector<double> counts(b, 0.0);
  for (std::size_t g = 0; g < b; ++g) {
    for (std::size_t i = 0; i < n; ++i) {
      if (node_mask[g * n + i]) {
        counts[g] += 1.0;
        for (std::size_t c = 0; c < d; ++c) {
          out[g * d + c] += hv[(g * n + i) * d + c];
        }
      }
    }
    require(counts[g] > 0.0, "masked_mean: graph " + std::to_string(g) + " has no nodes");
    for (std::size_t c = 0; c < d; ++c) {
      out[g * d + c] /= counts[g];
    }
  }
  return tape.record("masked_mean", std::move(out), {h},
                     [h, node_mask, counts = std::move(counts), b, n, d](Tape& t, const Tensor& g, const Tensor&) {
                       Tensor& gh = t.grad_for(h);
                       for (std::size_t s = 0; s < b; ++s) {
                         for (std::size_t i = 0; i < n; ++i) {
                           if (node_mask[s * n + i]) {
                             for (std::size_t c = 0; c < d; ++c) {
                               gh[(s * n + i) * d + c] += g[s * d + c] / counts[s];
                             }
                           }
                         }
                       }
                     });
}

Var pair_concat(Tape& tape, Var h, std::optional<Var> extra) {
  const Tensor& hv = tape.value(h);
  require(hv.rank() == 3, "pair_concat: expected node tensor [b, n, d]");
  const std::size_t b = hv.dim(0), n = hv.dim(1), d = hv.dim(2);
  std::size_t d2 = 0;
  if (extra) {
    const Tensor& ev = tape.value(*extra);
    require(ev.rank() == 4 && ev.dim(0) == b && ev.dim(1) == n && ev.dim(2) == n,
            "pair_concat: extra must be [b, n, n, d2]");
    d2 = ev.dim(3);
  }
  const std::size_t width = 2 * d + d2;
  Tensor out({b, n, n, width});
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double* dst = out.data().data() + ((s * n + i) * n + j) * width;
        const double* hi = hv.data().data() + (s * n + i) * d;
        const double* hj = hv.data().data() + (s * n + j) * d;
        std::copy_n(hi, d, dst);
        std::copy_n(hj, d, dst + d);
        if (extra) {
          const double* ex = tape.value(*extra).data().data() + ((s * n + i) * n + j) * d2;
          std::copy_n(ex, d2, dst + 2 * d);
        }
      }
    }
  }
  auto backward = [h, extra, b, n, d, d2, width](Tape& t, const Tensor& g, const Tensor&) {
    if (t.requires_grad(h)) {
      Tensor& gh = t.grad_for(h);
      for (std::size_t s = 0; s < b; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            const double* src = g.data().data() + ((s * n + i) * n + j) * width;
            for (std::size_t c = 0; c < d; ++c) {
              gh[(s * n + i) * d + c] += src[c];
              gh[(s * n + j) * d + c] += src[d + c];
            }
          }
        }
      }
    }
    if (extra && t.requires_grad(*extra)) {
      Tensor& ge = t.grad_for(*extra);
      for (std::size_t p = 0; p < b * n * n; ++p) {
        for (std::size_t c = 0; c < d2; ++c) {
          ge[p * d2 + c] += g[p * width + 2 * d + c];
        }
      }
    }
  };
  if (extra) {
    return tape.record("pair_concat", std::move(out), {h, *extra}, backward);
  }
  return tape.record("pair_concat", std::move(out), {h}, backward);
}

Var weighted_cross_entropy(Tape& tape, Var logits, std::span<const int> labels, const Mask& mask,
                           std::span<const double> class_weights) {
  const Tensor& lv = tape.value(logits);
  const std::size_t classes = lv.last_dim();
  const std::size_t items = lv.rows();
  require(labels.size() == items && mask.size() == items, "cross_entropy: labels/mask do not match logits");
  require(class_weights.size() == classes, "cross_entropy: class weight count mismatch");
  // Cache softmax probabilities for the backward pass.
  std::vector<double> probs(lv.size(), 0.0);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < items; ++r) {
    if (!mask[r]) {
      continue;
    }
    const int y = labels[r];
    require(y >= 0 && static_cast<std::size_t>(y) < classes,
            "cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    const double* row = lv.data().data() + r * classes;
    double peak = row[0];
    for (std::size_t c = 1; c < classes; ++c) {
      peak = std::max(peak, row[c]);
    }
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      z += std::exp(row[c] - peak);
    }
    const double log_z = std::log(z) + peak;
    for (std::size_t c = 0; c < classes; ++c) {
      probs[r * classes + c] = std::exp(row[c] - log_z);
    }
    total += class_weights[static_cast<std::size_t>(y)] * (log_z - row[static_cast<std::size_t>(y)]);
    ++count;
  }
  const double denom = count > 0 ? static_cast<double>(count) : 1.0;
  std::vector<int> saved_labels(labels.begin(), labels.end());
  std::vector<double> weights(class_weights.begin(), class_weights.end());
  return tape.record("cross_entropy", Tensor::scalar(total / denom), {logits},
                     [logits, mask, probs = std::move(probs), saved_labels = std::move(saved_labels),
                      weights = std::move(weights), classes, items, denom](Tape& t, const Tensor& g, const Tensor&) {
                       Tensor& gl = t.grad_for(logits);
                       for (std::size_t r = 0; r < items; ++r) {
                         if (!mask[r]) {
                           continue;
                         }
                         const auto y = static_cast<std::size_t>(saved_labels[r]);
                         const double factor = g[0] * weights[y] / denom;
                         for (std::size_t c = 0; c < classes; ++c) {
                           gl[r * classes + c] += factor * (probs[r * classes + c] - (c == y ? 1.0 : 0.0));
                         }
                       }
                     });
}

Var mean_absolute_error(Tape& tape, Var pred, std::span<const double> target, const Mask& mask) {
  const Tensor& pv = tape.value(pred);
  require(pv.size() == target.size() && mask.size() == target.size(), "mae: size mismatch");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (mask[i]) {
      total += std::abs(pv[i] - target[i]);
      ++count;
    }
  }
  const double denom = count > 0 ? static_cast<double>(count) : 1.0;
  std::vector<double> saved(target.begin(), target.end());
  return tape.record("mae", Tensor::scalar(total / denom), {pred},
                     [pred, mask, saved = std::move(saved), denom](Tape& t, const Tensor& g, const Tensor&) {
                       Tensor& gp = t.grad_for(pred);
                       const Tensor& pv = t.value(pred);
                       for (std::size_t i = 0; i < saved.size(); ++i) {
                         if (!mask[i]) {
                           continue;
                         }
                         const double diff = pv[i] - saved[i];
                         const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                         gp[i] += g[0] * sign / denom;
                       }
                     });
}

Mask expand_heads(const Mask& pair_mask, std::size_t heads) {
  require(pair_mask.shape().size() == 3, "expand_heads: expected [b, n, n] mask");
  const std::size_t b = pair_mask.shape()[0];
  const std::size_t nn = pair_mask.shape()[1] * pair_mask.shape()[2];
  Mask out({b, heads, pair_mask.shape()[1], pair_mask.shape()[2]});
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t p = 0; p < nn; ++p) {
        out.set((s * heads + h) * nn + p, pair_mask[s * nn + p]);
      }
    }
  }
  return out;
}

}  // namespace egt::ops
