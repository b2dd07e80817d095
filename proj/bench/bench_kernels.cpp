// Serial reference kernels against the OpenMP kernels at model-like sizes.
// Thread count follows EGT_NUM_THREADS.
#include <benchmark/benchmark.h>

#include <vector>

#include "egt/kernels.hpp"
#include "egt/rng.hpp"

namespace {

std::vector<double> random_values(std::size_t count, std::uint64_t seed) {
  egt::Rng rng(seed);
  std::vector<double> v(count);
  for (double& x : v) {
    x = rng.uniform(-1.0, 1.0);
  }
  return v;
}

// Pair-tensor linear map: [batch * n * n, in] x [out, in]^T.
template <bool Parallel>
void BM_LinearPairs(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t rows = 16 * n * n;
  const std::size_t in = 16;
  const std::size_t out = 32;
  const auto x = random_values(rows * in, 1);
  const auto w = random_values(out * in, 2);
  const auto bias = random_values(out, 3);
  std::vector<double> y(rows * out);
  for (auto _ : state) {
    if constexpr (Parallel) {
      egt::kernels::linear_forward(x, rows, in, w, out, bias, y);
    } else {
      egt::kernels::reference::linear_forward(x, rows, in, w, out, bias, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows * in * out));
}

template <bool Parallel>
void BM_HeadScores(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t batch = 16;
  const std::size_t heads = 8;
  const std::size_t width = 8;
  const auto q = random_values(batch * n * heads * width, 4);
  const auto k = random_values(batch * n * heads * width, 5);
  std::vector<double> s(batch * heads * n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      egt::kernels::head_scores(q, k, batch, n, heads, width, 0.35, s);
    } else {
      egt::kernels::reference::head_scores(q, k, batch, n, heads, width, 0.35, s);
    }
    benchmark::DoNotOptimize(s.data());
  }
}

template <bool Parallel>
void BM_MaskedSoftmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t rows = 16 * 8 * n;
  const auto x = random_values(rows * n, 6);
  std::vector<std::uint8_t> mask(rows * n, 1);
  std::vector<double> y(rows * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      egt::kernels::masked_softmax_forward(x, mask, rows, n, y);
    } else {
      egt::kernels::reference::masked_softmax_forward(x, mask, rows, n, y);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_LayerNormPairs(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t rows = 16 * n * n;
  const std::size_t d = 16;
  const auto x = random_values(rows * d, 7);
  const std::vector<double> gain(d, 1.0);
  const std::vector<double> bias(d, 0.0);
  std::vector<double> y(rows * d);
  std::vector<double> mean(rows);
  std::vector<double> rstd(rows);
  for (auto _ : state) {
    if constexpr (Parallel) {
      egt::kernels::layer_norm_forward(x, rows, d, gain, bias, 1e-5, y, mean, rstd);
    } else {
      egt::kernels::reference::layer_norm_forward(x, rows, d, gain, bias, 1e-5, y, mean, rstd);
    }
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_LinearPairs<false>)->Name("linear_pairs/serial")->Arg(24)->Arg(48);
BENCHMARK(BM_LinearPairs<true>)->Name("linear_pairs/openmp")->Arg(24)->Arg(48);
BENCHMARK(BM_HeadScores<false>)->Name("head_scores/serial")->Arg(24)->Arg(48);
BENCHMARK(BM_HeadScores<true>)->Name("head_scores/openmp")->Arg(24)->Arg(48);
BENCHMARK(BM_MaskedSoftmax<false>)->Name("masked_softmax/serial")->Arg(24)->Arg(48);
BENCHMARK(BM_MaskedSoftmax<true>)->Name("masked_softmax/openmp")->Arg(24)->Arg(48);
BENCHMARK(BM_LayerNormPairs<false>)->Name("layer_norm_pairs/serial")->Arg(24)->Arg(48);
BENCHMARK(BM_LayerNormPairs<true>)->Name("layer_norm_pairs/openmp")->Arg(24)->Arg(48);

BENCHMARK_MAIN();
