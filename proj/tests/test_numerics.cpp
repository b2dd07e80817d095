#include <cmath>
#include <limits>

#include "doctest.h"
#include "egt/error.hpp"
#include "egt/gradcheck.hpp"
#include "egt/kernels.hpp"
#include "egt/ops.hpp"
#include "egt/svd.hpp"
#include "support.hpp"

using namespace egt;
using egt::test::op_gradient_error;
using egt::test::random_mask;
using egt::test::random_tensor;

namespace {

Tensor run_op(const Tensor& x, const std::function<Var(Tape&, Var)>& op) {
  Tape tape;
  return tape.value(op(tape, tape.constant(x)));
}

Tensor column(const Tensor& m, std::size_t k) {
  const std::size_t n = m.dim(0);
  Tensor c({n});
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = m[i * n + k];
  }
  return c;
}

double dot(const Tensor& a, const Tensor& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

double orthonormality_error(const Tensor& m) {
  return max_abs_diff(matmul(transpose(m), m), identity(m.dim(0)));
}

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("tensor shape invariants and errors") {
    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), Error);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.rows() == 2);
    CHECK(t.last_dim() == 3);
    t.at({1, 2}) = 4.0;
    CHECK(t[5] == 4.0);
    CHECK_THROWS_AS(t.at({2, 0}), Error);
    Tensor bad({2}, {1.0, std::nan("")});
    CHECK_THROWS_AS(check_finite(bad, "test"), NumericError);
  }

  TEST_CASE("layer_norm examples") {
    Tape tape;
    const Var gain = tape.constant(Tensor({3}, 1.0));
    const Var bias = tape.constant(Tensor({3}, 0.0));
    const Tensor flat = tape.value(ops::layer_norm(tape, tape.constant(Tensor({3}, {2.5, 2.5, 2.5})), gain, bias, 1e-5));
    CHECK(max_abs(flat) == 0.0);

    const Var g2 = tape.constant(Tensor({2}, 1.0));
    const Var b2 = tape.constant(Tensor({2}, 0.0));
    const Tensor unit = tape.value(ops::layer_norm(tape, tape.constant(Tensor({2}, {1.0, -1.0})), g2, b2, 1e-14));
    CHECK(unit[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(unit[1] == doctest::Approx(-1.0).epsilon(1e-12));

    // Zero-variance slice maps to the bias.
    const Var b3 = tape.constant(Tensor({3}, {0.1, -0.2, 0.3}));
    const Tensor shifted = tape.value(ops::layer_norm(tape, tape.constant(Tensor({3}, 7.0)), gain, b3, 1e-5));
    CHECK(shifted == tape.value(b3));

    CHECK_THROWS_AS(ops::layer_norm(tape, tape.constant(Tensor({3}, 1.0)), gain, bias, 0.0), Error);
  }

  TEST_CASE("layer_norm gradient matches finite differences") {
    const double err = op_gradient_error(
        {random_tensor({4, 5}, 1), random_tensor({5}, 2, 0.5, 1.5), random_tensor({5}, 3)},
        [](Tape& t, const std::vector<Var>& v) { return ops::layer_norm(t, v[0], v[1], v[2], 1e-5); });
    CHECK(err < 1e-6);
  }

  TEST_CASE("masked_softmax examples") {
    const Tensor third = run_op(Tensor({3}, 0.0), [](Tape& t, Var x) { return ops::masked_softmax(t, x, Mask({3}, true)); });
    for (double v : third.data()) {
      CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    }

    Mask first({3});
    first.set(0, true);
    const Tensor one = run_op(Tensor({3}, {5.0, 9.0, 2.0}), [&](Tape& t, Var x) { return ops::masked_softmax(t, x, first); });
    CHECK(one == Tensor({3}, {1.0, 0.0, 0.0}));

    // Oracle: exp evaluated in extended precision.
    const long double e0 = 1.0L;
    const long double e1 = std::exp(std::log(2.0L));
    const Tensor two = run_op(Tensor({2}, {0.0, std::log(2.0)}), [](Tape& t, Var x) { return ops::masked_softmax(t, x, Mask({2}, true)); });
    CHECK(std::abs(two[0] - static_cast<double>(e0 / (e0 + e1))) < 1e-15);
    CHECK(std::abs(two[1] - static_cast<double>(e1 / (e0 + e1))) < 1e-15);
  }

  TEST_CASE("masked_softmax fully masked rows") {
    Tape tape;
    const Var x = tape.constant(random_tensor({2, 3}, 4));
    Mask mask({2, 3}, true);
    for (std::size_t j = 3; j < 6; ++j) {
      mask.set(j, false);
    }
    CHECK_THROWS_AS(ops::masked_softmax(tape, x, mask), Error);
    const Tensor y = tape.value(ops::masked_softmax(tape, x, mask, true));
    for (std::size_t j = 3; j < 6; ++j) {
      CHECK(y[j] == 0.0);
    }
  }

  TEST_CASE("masked_softmax rows sum to one and ignore shifts") {
    const Tensor x = random_tensor({50, 7}, 5, -20.0, 20.0);
    Mask mask = random_mask({50, 7}, 6);
    for (std::size_t r = 0; r < 50; ++r) {
      mask.set(r * 7, true);
    }
    Tensor shifted = x;
    for (std::size_t r = 0; r < 50; ++r) {
      for (std::size_t j = 0; j < 7; ++j) {
        shifted[r * 7 + j] += 3.25 * static_cast<double>(r % 5) - 4.0;
      }
    }
    const Tensor y = run_op(x, [&](Tape& t, Var v) { return ops::masked_softmax(t, v, mask); });
    const Tensor ys = run_op(shifted, [&](Tape& t, Var v) { return ops::masked_softmax(t, v, mask); });
    for (std::size_t r = 0; r < 50; ++r) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        const double v = y[r * 7 + j];
        if (mask[r * 7 + j]) {
          CHECK(v > 0.0);
        } else {
          CHECK(v == 0.0);
        }
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    CHECK(max_abs_diff(y, ys) <= 1e-12);
  }

  TEST_CASE("masked_softmax gradient") {
    Mask mask = random_mask({3, 4, 5}, 7);
    for (std::size_t r = 0; r < 12; ++r) {
      mask.set(r * 5 + 2, true);
    }
    CHECK(op_gradient_error({random_tensor({3, 4, 5}, 8)},
                            [&](Tape& t, const std::vector<Var>& v) { return ops::masked_softmax(t, v[0], mask); }) < 1e-6);
  }

  TEST_CASE("pointwise nonlinearities") {
    auto scalar = [](double x, const std::function<Var(Tape&, Var)>& op) { return run_op(Tensor({1}, {x}), op)[0]; };
    auto clip5 = [](Tape& t, Var x) { return ops::clip(t, x, -5.0, 5.0); };
    CHECK(scalar(7.3, clip5) == 5.0);
    CHECK(scalar(-7.3, clip5) == -5.0);
    CHECK(scalar(0.0, [](Tape& t, Var x) { return ops::elu(t, x); }) == 0.0);
    CHECK(scalar(0.0, [](Tape& t, Var x) { return ops::sigmoid(t, x); }) == 0.5);
    const double elu_ref = static_cast<double>(std::expm1(-1.0L));
    CHECK(std::abs(scalar(-1.0, [](Tape& t, Var x) { return ops::elu(t, x); }) - elu_ref) < 1e-15);
    CHECK(std::abs(elu_ref + 0.632121) < 1e-6);
    CHECK(scalar(2.5, [](Tape& t, Var x) { return ops::elu(t, x); }) == 2.5);
    CHECK(scalar(-800.0, [](Tape& t, Var x) { return ops::sigmoid(t, x); }) >= 0.0);
    CHECK(scalar(800.0, [](Tape& t, Var x) { return ops::sigmoid(t, x); }) == 1.0);

    Tape tape;
    CHECK_THROWS_AS(ops::clip(tape, tape.constant(Tensor({1}, 0.0)), 1.0, 1.0), Error);
  }

  TEST_CASE("clip is idempotent and has zero gradient at and beyond the bounds") {
    const Tensor x = random_tensor({200}, 9, -10.0, 10.0);
    const Tensor once = run_op(x, [](Tape& t, Var v) { return ops::clip(t, v, -5.0, 5.0); });
    const Tensor twice = run_op(once, [](Tape& t, Var v) { return ops::clip(t, v, -5.0, 5.0); });
    CHECK(once == twice);

    Tape tape;
    const Var v = tape.parameter(Tensor({5}, {-6.0, -5.0, 0.5, 5.0, 6.0}));
    tape.backward(ops::sum(tape, ops::clip(tape, v, -5.0, 5.0)));
    CHECK(tape.grad(v) == Tensor({5}, {0.0, 0.0, 1.0, 0.0, 0.0}));
  }

  TEST_CASE("pointwise gradients") {
    const Tensor x = random_tensor({3, 4}, 10);
    CHECK(op_gradient_error({x}, [](Tape& t, const std::vector<Var>& v) { return ops::elu(t, v[0]); }) < 1e-6);
    CHECK(op_gradient_error({x}, [](Tape& t, const std::vector<Var>& v) { return ops::sigmoid(t, v[0]); }) < 1e-6);
    CHECK(op_gradient_error({x}, [](Tape& t, const std::vector<Var>& v) { return ops::clip(t, v[0], -0.55, 0.45); }) < 1e-6);
    CHECK(op_gradient_error({x}, [](Tape& t, const std::vector<Var>& v) { return ops::scale(t, v[0], -2.5); }) < 1e-6);
  }

  TEST_CASE("arithmetic and structural op gradients") {
    const Tensor a = random_tensor({2, 3, 4}, 11);
    const Tensor b = random_tensor({2, 3, 4}, 12);
    CHECK(op_gradient_error({a, b}, [](Tape& t, const std::vector<Var>& v) { return ops::add(t, v[0], v[1]); }) < 1e-6);
    CHECK(op_gradient_error({a, b}, [](Tape& t, const std::vector<Var>& v) { return ops::mul(t, v[0], v[1]); }) < 1e-6);
    CHECK(op_gradient_error({a}, [](Tape& t, const std::vector<Var>& v) { return ops::sum(t, v[0]); }) < 1e-6);
    CHECK(op_gradient_error({a}, [](Tape& t, const std::vector<Var>& v) { return ops::permute(t, v[0], {2, 0, 1}); }) < 1e-6);
    const Mask m = random_mask({2, 3}, 13);
    CHECK(op_gradient_error({a}, [&](Tape& t, const std::vector<Var>& v) { return ops::apply_mask(t, v[0], m); }) < 1e-6);
    CHECK(op_gradient_error({random_tensor({4}, 14)},
                            [&](Tape& t, const std::vector<Var>& v) { return ops::masked_broadcast(t, v[0], m); }) < 1e-6);
  }

  TEST_CASE("linear and embedding gradients") {
    const Tensor x = random_tensor({2, 3, 4}, 15);
    const Tensor w = random_tensor({5, 4}, 16);
    const Tensor bias = random_tensor({5}, 17);
    CHECK(op_gradient_error({x, w, bias}, [](Tape& t, const std::vector<Var>& v) { return ops::linear(t, v[0], v[1], v[2]); }) < 1e-6);
    CHECK(op_gradient_error({x, w}, [](Tape& t, const std::vector<Var>& v) { return ops::linear(t, v[0], v[1]); }) < 1e-6);
    const std::vector<int> ids{0, 2, 2, 1, 0, 2};
    CHECK(op_gradient_error({random_tensor({3, 4}, 18)},
                            [&](Tape& t, const std::vector<Var>& v) { return ops::embedding(t, v[0], ids, {2, 3}); }) < 1e-6);
    Tape tape;
    const std::vector<int> bad{0, 3};
    CHECK_THROWS_AS(ops::embedding(tape, tape.constant(Tensor({3, 2})), bad, {2}), Error);
    CHECK_THROWS_AS(ops::linear(tape, tape.constant(Tensor({2, 3})), tape.constant(Tensor({4, 2}))), Error);
  }

  TEST_CASE("attention op gradients") {
    const std::size_t b = 2, n = 4, heads = 2, width = 3;
    const Tensor q = random_tensor({b, n, heads * width}, 19);
    const Tensor k = random_tensor({b, n, heads * width}, 20);
    CHECK(op_gradient_error({q, k}, [&](Tape& t, const std::vector<Var>& v) { return ops::head_scores(t, v[0], v[1], heads, 0.7); }) < 1e-6);
    const Tensor w = random_tensor({b, heads, n, n}, 21);
    CHECK(op_gradient_error({w, q}, [&](Tape& t, const std::vector<Var>& v) { return ops::attend(t, v[0], v[1], heads); }) < 1e-6);
    Mask nodes({b, n}, true);
    nodes.set(7, false);
    CHECK(op_gradient_error({q}, [&](Tape& t, const std::vector<Var>& v) { return ops::masked_mean(t, v[0], nodes); }) < 1e-6);
    const Tensor extra = random_tensor({b, n, n, 2}, 22);
    CHECK(op_gradient_error({q, extra}, [&](Tape& t, const std::vector<Var>& v) { return ops::pair_concat(t, v[0], v[1]); }) < 1e-6);
  }

  TEST_CASE("head_scores matches a direct evaluation") {
    const std::size_t b = 1, n = 3, heads = 2, width = 2;
    const Tensor q = random_tensor({b, n, heads * width}, 23);
    const Tensor k = random_tensor({b, n, heads * width}, 24);
    Tape tape;
    const Tensor s = tape.value(ops::head_scores(tape, tape.constant(q), tape.constant(k), heads, 0.5));
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double ref = 0.0;
          for (std::size_t c = 0; c < width; ++c) {
            ref += q[i * heads * width + h * width + c] * k[j * heads * width + h * width + c];
          }
          CHECK(std::abs(s[(h * n + i) * n + j] - 0.5 * ref) < 1e-15);
        }
      }
    }
  }

  TEST_CASE("loss op gradients") {
    const Tensor logits = random_tensor({2, 3, 4}, 25, -2.0, 2.0);
    const std::vector<int> labels{0, 3, 1, 2, 2, 0};
    Mask mask({2, 3}, true);
    mask.set(4, false);
    const std::vector<double> weights{0.5, 1.0, 2.0, 1.5};
    CHECK(op_gradient_error({logits}, [&](Tape& t, const std::vector<Var>& v) {
            return ops::weighted_cross_entropy(t, v[0], labels, mask, weights);
          }) < 1e-6);
    const Tensor pred = random_tensor({6, 1}, 26);
    const std::vector<double> target{2.0, -2.0, 2.0, -2.0, 2.0, -2.0};
    CHECK(op_gradient_error({pred}, [&](Tape& t, const std::vector<Var>& v) {
            return ops::mean_absolute_error(t, v[0], target, Mask({6}, true));
          }) < 1e-6);
  }

  TEST_CASE("finite_diff_grad examples") {
    const Tensor g = finite_diff_grad([](const Tensor& x) { return x[0] * x[0]; }, Tensor({1}, {3.0}), 1e-5);
    CHECK(std::abs(g[0] - 6.0) < 1e-8);
    const Tensor z = finite_diff_grad([](const Tensor&) { return 4.0; }, random_tensor({5}, 27));
    CHECK(max_abs(z) == 0.0);
    CHECK_THROWS_AS(finite_diff_grad([](const Tensor& x) { return x[0] > 0.0 ? std::nan("") : 0.0; }, Tensor({1}, {0.0})),
                    Error);
    CHECK(relative_error(Tensor({2}, {1.0, 2.0}), Tensor({2}, {1.0, 2.2})) == doctest::Approx(0.2 / 2.2));
    CHECK(relative_error(Tensor({2}, 0.0), Tensor({2}, 0.0)) == 0.0);
  }

  TEST_CASE("tape contract") {
    Tape tape;
    const Var a = tape.parameter(random_tensor({3}, 28));
    const Var c = tape.constant(random_tensor({3}, 29));
    const Var y = ops::mul(tape, a, c);
    CHECK_THROWS_AS(tape.backward(y), Error);
    tape.backward(ops::sum(tape, y));
    CHECK(tape.grad(a) == tape.value(c));
    CHECK(tape.grad(a).shape() == tape.value(a).shape());
    CHECK(!tape.requires_grad(c));
    CHECK(max_abs(tape.grad(c)) == 0.0);

    Tape overflow;
    const Var big = overflow.parameter(Tensor({1}, {1e308}));
    CHECK_THROWS_AS(ops::scale(overflow, big, 10.0), NumericError);
  }

  TEST_CASE("backward fault injection changes gradients") {
    Tape tape;
    tape.inject_backward_fault("elu", 1.5);
    const Var x = tape.parameter(Tensor({2}, {0.3, -0.4}));
    tape.backward(ops::sum(tape, ops::elu(tape, x)));
    CHECK(tape.grad(x)[0] == doctest::Approx(1.5));
  }

  TEST_CASE("svd examples") {
    const SvdResult id = svd(identity(3));
    CHECK(id.sigma == Tensor({3}, 1.0));
    CHECK(max_abs_diff(matmul(id.u, transpose(id.v)), identity(3)) == 0.0);

    // Hand 2x2: ones = 2 * (1,1)/sqrt2 (1,1)^T/sqrt2, second singular value 0.
    const SvdResult ones = svd(Tensor({2, 2}, 1.0));
    CHECK(std::abs(ones.sigma[0] - 2.0) < 1e-15);
    CHECK(std::abs(ones.sigma[1]) < 1e-15);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(std::abs(ones.u[0]) - r) < 1e-15);
    CHECK(std::abs(std::abs(ones.u[2]) - r) < 1e-15);
    CHECK(std::abs(std::abs(ones.v[0]) - r) < 1e-15);
    CHECK(ones.u[0] * ones.u[2] > 0.0);
    CHECK(orthonormality_error(ones.u) < 1e-12);
  }

  TEST_CASE("svd reconstruction and orthogonality on random matrices") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const std::size_t n = 1 + seed % 9;
      const Tensor m = random_tensor({n, n}, 100 + seed, -3.0, 3.0);
      const SvdResult s = svd(m);
      CHECK(egt::test::frobenius_diff(svd_reconstruct(s), m) <= 1e-8 * std::max(1.0, frobenius_norm(m)));
      CHECK(orthonormality_error(s.u) <= 1e-8);
      CHECK(orthonormality_error(s.v) <= 1e-8);
      for (std::size_t k = 0; k + 1 < n; ++k) {
        CHECK(s.sigma[k] >= s.sigma[k + 1]);
      }
      CHECK(s.sigma[n - 1] >= 0.0);
    }
  }

  TEST_CASE("svd of rank-deficient matrices still yields orthogonal factors") {
    Tensor m({6, 6});
    for (std::size_t i = 0; i < 6; ++i) {
      for (std::size_t j = 0; j < 6; ++j) {
        m[i * 6 + j] = (i % 2 == 0 ? 1.0 : 2.0) * static_cast<double>(j + 1);
      }
    }
    for (const Tensor& a : {m, Tensor({5, 5}, 0.0), Tensor({7, 7}, 1.0)}) {
      const SvdResult s = svd(a);
      CHECK(orthonormality_error(s.u) <= 1e-8);
      CHECK(orthonormality_error(s.v) <= 1e-8);
      CHECK(max_abs_diff(svd_reconstruct(s), a) <= 1e-8 * std::max(1.0, frobenius_norm(a)));
    }
  }

  TEST_CASE("svd of symmetric PSD matrices matches the eigen decomposition") {
    const Tensor b = random_tensor({6, 6}, 30);
    const Tensor psd = matmul(b, transpose(b));
    const SvdResult s = svd(psd);
    for (std::size_t k = 0; k < 6; ++k) {
      const Tensor u = column(s.u, k);
      const Tensor v = column(s.v, k);
      CHECK(std::abs(dot(u, v)) >= 1.0 - 1e-8);
      // Independent check: psd * v == sigma * v.
      const Tensor pv = matmul(psd, v.reshaped({6, 1}));
      for (std::size_t i = 0; i < 6; ++i) {
        CHECK(std::abs(pv[i] - s.sigma[k] * v[i]) < 1e-9);
      }
    }
  }

  TEST_CASE("svd is deterministic and reports non-convergence") {
    const Tensor m = random_tensor({8, 8}, 31);
    const SvdResult a = svd(m);
    const SvdResult b = svd(m);
    CHECK(a.u == b.u);
    CHECK(a.sigma == b.sigma);
    CHECK(a.v == b.v);
    SvdOptions strict;
    strict.max_sweeps = 1;
    try {
      svd(m, strict);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("residual") != std::string::npos);
    }
    CHECK_THROWS_AS(svd(Tensor({2, 3})), Error);
    CHECK_THROWS_AS(svd(Tensor({2, 2}, {1.0, std::numeric_limits<double>::infinity(), 0.0, 1.0})), Error);
  }

  TEST_CASE("parallel kernels are bitwise equal to the serial reference") {
    namespace k = egt::kernels;
    namespace r = egt::kernels::reference;
    const int saved = k::thread_count();
    k::set_thread_count(4);
    const std::size_t rows = 37, in = 5, out = 7;
    const Tensor x = random_tensor({rows, in}, 32);
    const Tensor w = random_tensor({out, in}, 33);
    const Tensor bias = random_tensor({out}, 34);
    const Tensor dy = random_tensor({rows, out}, 35);
    {
      std::vector<double> a(rows * out), b(rows * out);
      k::linear_forward(x.data(), rows, in, w.data(), out, bias.data(), a);
      r::linear_forward(x.data(), rows, in, w.data(), out, bias.data(), b);
      CHECK(a == b);
      std::vector<double> dxa(rows * in), dxb(rows * in);
      k::linear_backward_input(dy.data(), rows, out, w.data(), in, dxa);
      r::linear_backward_input(dy.data(), rows, out, w.data(), in, dxb);
      CHECK(dxa == dxb);
      std::vector<double> dwa(out * in), dwb(out * in), dba(out), dbb(out);
      k::linear_backward_params(dy.data(), x.data(), rows, in, out, dwa, dba);
      r::linear_backward_params(dy.data(), x.data(), rows, in, out, dwb, dbb);
      CHECK(dwa == dwb);
      CHECK(dba == dbb);
    }
    {
      const std::size_t b = 3, n = 5, heads = 2, width = 3;
      const Tensor q = random_tensor({b, n, heads * width}, 36);
      const Tensor kk = random_tensor({b, n, heads * width}, 37);
      const Tensor ds = random_tensor({b, heads, n, n}, 38);
      std::vector<double> sa(b * heads * n * n), sb(sa.size());
      k::head_scores(q.data(), kk.data(), b, n, heads, width, 0.3, sa);
      r::head_scores(q.data(), kk.data(), b, n, heads, width, 0.3, sb);
      CHECK(sa == sb);
      std::vector<double> dqa(q.size()), dqb(q.size()), dka(q.size()), dkb(q.size());
      k::head_scores_backward(ds.data(), q.data(), kk.data(), b, n, heads, width, 0.3, dqa, dka);
      r::head_scores_backward(ds.data(), q.data(), kk.data(), b, n, heads, width, 0.3, dqb, dkb);
      CHECK(dqa == dqb);
      CHECK(dka == dkb);
      std::vector<double> ya(q.size()), yb(q.size());
      k::attend(ds.data(), q.data(), b, n, heads, width, ya);
      r::attend(ds.data(), q.data(), b, n, heads, width, yb);
      CHECK(ya == yb);
      std::vector<double> dwa(ds.size()), dwb(ds.size()), dva(q.size()), dvb(q.size());
      k::attend_backward(kk.data(), ds.data(), q.data(), b, n, heads, width, dwa, dva);
      r::attend_backward(kk.data(), ds.data(), q.data(), b, n, heads, width, dwb, dvb);
      CHECK(dwa == dwb);
      CHECK(dva == dvb);
    }
    {
      const std::size_t d = 6;
      const Tensor xs = random_tensor({rows, d}, 39);
      const Tensor g = random_tensor({d}, 40);
      const Tensor bb = random_tensor({d}, 41);
      const Tensor dys = random_tensor({rows, d}, 42);
      std::vector<double> ya(rows * d), yb(rows * d), ma(rows), mb(rows), sa(rows), sb(rows);
      k::layer_norm_forward(xs.data(), rows, d, g.data(), bb.data(), 1e-5, ya, ma, sa);
      r::layer_norm_forward(xs.data(), rows, d, g.data(), bb.data(), 1e-5, yb, mb, sb);
      CHECK(ya == yb);
      CHECK(ma == mb);
      CHECK(sa == sb);
      std::vector<double> dxa(rows * d), dxb(rows * d), dga(d), dgb(d), dba(d), dbb(d);
      k::layer_norm_backward(dys.data(), xs.data(), ma, sa, g.data(), rows, d, dxa, dga, dba);
      r::layer_norm_backward(dys.data(), xs.data(), mb, sb, g.data(), rows, d, dxb, dgb, dbb);
      CHECK(dxa == dxb);
      CHECK(dga == dgb);
      CHECK(dba == dbb);

      const Mask mask = random_mask({rows, d}, 43);
      std::vector<double> pa(rows * d), pb(rows * d);
      const std::size_t ea = k::masked_softmax_forward(xs.data(), mask.data(), rows, d, pa);
      const std::size_t eb = r::masked_softmax_forward(xs.data(), mask.data(), rows, d, pb);
      CHECK(pa == pb);
      CHECK(ea == eb);
      std::vector<double> gxa(rows * d), gxb(rows * d);
      k::masked_softmax_backward(dys.data(), pa, rows, d, gxa);
      r::masked_softmax_backward(dys.data(), pb, rows, d, gxb);
      CHECK(gxa == gxb);
    }
    k::set_thread_count(saved);
  }
}
