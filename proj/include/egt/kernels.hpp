#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Dense inner loops of the model. Two implementations share one signature set:
//
//   egt::kernels             OpenMP-parallel, used by the autograd ops
//   egt::kernels::reference  plain serial loops, kept for tests and benchmarks
//
// Both accumulate every output element in the same order, so their results are
// bitwise identical for any thread count. Backward kernels accumulate (+=) into
// their gradient outputs.

namespace egt::kernels {

using In = std::span<const double>;
using Out = std::span<double>;
using MaskIn = std::span<const std::uint8_t>;

#define EGT_KERNEL_DECLARATIONS                                                                  \
  /* y[r,o] = sum_i x[r,i] w[o,i] + bias[o]; bias may be empty. */                               \
  void linear_forward(In x, std::size_t rows, std::size_t in, In w, std::size_t out, In bias,    \
                      Out y);                                                                    \
  void linear_backward_input(In dy, std::size_t rows, std::size_t out, In w, std::size_t in,     \
                             Out dx);                                                            \
  /* dbias may be empty. */                                                                      \
  void linear_backward_params(In dy, In x, std::size_t rows, std::size_t in, std::size_t out,    \
                              Out dw, Out dbias);                                                \
  /* q,k: [b,n,heads*width] -> s: [b,heads,n,n], s = scale * <q_i, k_j> per head. */             \
  void head_scores(In q, In k, std::size_t batch, std::size_t n, std::size_t heads,              \
                   std::size_t width, double scale, Out s);                                      \
  void head_scores_backward(In ds, In q, In k, std::size_t batch, std::size_t n,                 \
                            std::size_t heads, std::size_t width, double scale, Out dq, Out dk); \
  /* w: [b,heads,n,n], v: [b,n,heads*width] -> y: [b,n,heads*width]. */                          \
  void attend(In w, In v, std::size_t batch, std::size_t n, std::size_t heads, std::size_t width, \
              Out y);                                                                            \
  void attend_backward(In dy, In w, In v, std::size_t batch, std::size_t n, std::size_t heads,   \
                       std::size_t width, Out dw, Out dv);                                       \
  /* Writes per-row mean and reciprocal standard deviation for the backward pass. */             \
  void layer_norm_forward(In x, std::size_t rows, std::size_t d, In gain, In bias, double eps,   \
                          Out y, Out mean, Out rstd);                                            \
  void layer_norm_backward(In dy, In x, In mean, In rstd, In gain, std::size_t rows,             \
                           std::size_t d, Out dx, Out dgain, Out dbias);                         \
  /* Rows with no unmasked entry produce zeros; returns how many such rows were seen. */         \
  std::size_t masked_softmax_forward(In x, MaskIn mask, std::size_t rows, std::size_t n, Out y); \
  void masked_softmax_backward(In dy, In y, std::size_t rows, std::size_t n, Out dx);

EGT_KERNEL_DECLARATIONS

namespace reference {
EGT_KERNEL_DECLARATIONS
}  // namespace reference

#undef EGT_KERNEL_DECLARATIONS

// Thread count used by the parallel kernels (honours EGT_NUM_THREADS).
int thread_count();
void set_thread_count(int threads);

}  // namespace egt::kernels
