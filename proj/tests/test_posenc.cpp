#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "egt/error.hpp"
#include "egt/posenc.hpp"
#include "support.hpp"

using namespace egt;

namespace {

Tensor random_graph(std::size_t n, double p, std::uint64_t seed, bool symmetric) {
  Rng rng(seed);
  Tensor a({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = symmetric ? i + 1 : 0; j < n; ++j) {
      if (i == j) {
        continue;
      }
      const double v = rng.bernoulli(p) ? 1.0 : 0.0;
      a.at({i, j}) = v;
      if (symmetric) {
        a.at({j, i}) = v;
      }
    }
  }
  return a;
}

Tensor ring(std::size_t n) {
  Tensor a({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    a.at({i, (i + 1) % n}) = a.at({(i + 1) % n, i}) = 1.0;
  }
  return a;
}

double residual(const Tensor& a, const SvdEncoding& e) {
  return frobenius_norm(a) == 0.0 ? 0.0 : test::frobenius_diff(matmul(e.u_hat, transpose(e.v_hat)), a);
}

// Normalized Laplacian built longhand, ignoring the diagonal of `a`.
Tensor normalized_laplacian(const Tensor& a) {
  const std::size_t n = a.dim(0);
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) {
        deg[i] += a.at({i, j});
      }
    }
  }
  Tensor l({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double aij = i == j ? 0.0 : a.at({i, j});
      const double norm = deg[i] > 0 && deg[j] > 0 ? aij / std::sqrt(deg[i] * deg[j]) : 0.0;
      l.at({i, j}) = (i == j && deg[i] > 0 ? 1.0 : 0.0) - norm;
    }
  }
  return l;
}

}  // namespace

TEST_SUITE("posenc") {
  TEST_CASE("identity matrix is reconstructed exactly") {
    const Tensor a = identity(3);
    const SvdEncoding e = svd_encodings(a, 3);
    CHECK(e.gamma_hat.shape() == Shape{3, 6});
    CHECK(residual(a, e) <= 1e-12);
    for (std::size_t i = 0; i < 3; ++i) {
      double sq = 0.0;
      for (std::size_t k = 0; k < 6; ++k) {
        sq += e.gamma_hat.at({i, k}) * e.gamma_hat.at({i, k});
      }
      CHECK(std::sqrt(sq) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    }
  }

  TEST_CASE("rank one all-ones matrix") {
    const Tensor a({2, 2}, 1.0);
    const SvdEncoding e = svd_encodings(a, 1);
    CHECK(residual(a, e) <= 1e-12);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(std::abs(e.u_hat.at({i, 0})) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::abs(e.v_hat.at({i, 0})) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("full rank reconstructs and residual shrinks with rank") {
    for (bool symmetric : {true, false}) {
      const Tensor a = random_graph(8, 0.4, symmetric ? 3 : 4, symmetric);
      CHECK(residual(a, svd_encodings(a, 8)) <= 1e-8);
      double previous = INFINITY;
      for (std::size_t r = 1; r <= 8; ++r) {
        const double res = residual(a, svd_encodings(a, r));
        CHECK(res <= previous + 1e-12);
        previous = res;
      }
    }
  }

  TEST_CASE("rank-deficient inputs still yield finite encodings") {
    Tensor a({6, 6});
    a.at({0, 1}) = a.at({1, 0}) = 1.0;  // rank 2, four isolated nodes
    const SvdEncoding e = svd_encodings(a, 6);
    CHECK(all_finite(e.gamma_hat));
    CHECK(residual(a, e) <= 1e-12);
    CHECK(residual(Tensor({4, 4}), svd_encodings(Tensor({4, 4}), 2)) == 0.0);
  }

  TEST_CASE("singular vectors of a PSD matrix are its eigenvectors") {
    // B^T B has distinct eigenvalues with probability one.
    const Tensor b = test::random_tensor({6, 6}, 31);
    const Tensor m = matmul(transpose(b), b);
    const test::SymmetricEigen eig = test::symmetric_eigen(m);
    const SvdEncoding e = svd_encodings(m, 6);
    for (std::size_t k = 0; k < 6; ++k) {
      // Column k of u_hat pairs with the k-th largest eigenvalue.
      const std::size_t c = 5 - k;
      double dot = 0.0, nu = 0.0;
      for (std::size_t i = 0; i < 6; ++i) {
        dot += e.u_hat.at({i, k}) * eig.vectors.at({i, c});
        nu += e.u_hat.at({i, k}) * e.u_hat.at({i, k});
      }
      CHECK(std::abs(dot) / std::sqrt(nu) >= 1.0 - 1e-8);
      CHECK(nu == doctest::Approx(eig.values[c]).epsilon(1e-10));
    }
  }

  TEST_CASE("svd rank bounds") {
    CHECK_THROWS_AS(svd_encodings(identity(3), 0), Error);
    CHECK_THROWS_AS(svd_encodings(identity(3), 4), Error);
  }

  TEST_CASE("sign flips preserve the product exactly") {
    const Tensor a = random_graph(7, 0.5, 9, false);
    const SvdEncoding e = svd_encodings(a, 4);
    const Tensor product = matmul(e.u_hat, transpose(e.v_hat));
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const SvdEncoding f = sign_flip_augment(e, rng);
      CHECK(matmul(f.u_hat, transpose(f.v_hat)) == product);
      CHECK(f.gamma_hat == rebuild_gamma(f.u_hat, f.v_hat));
    }
    const SvdEncoding same = apply_sign_flips(e, std::vector<bool>(4, false));
    CHECK(same.gamma_hat == e.gamma_hat);
    const SvdEncoding one = apply_sign_flips(e, {false, true, false, false});
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(one.u_hat.at({i, 1}) == -e.u_hat.at({i, 1}));
      CHECK(one.v_hat.at({i, 1}) == -e.v_hat.at({i, 1}));
      CHECK(one.u_hat.at({i, 0}) == e.u_hat.at({i, 0}));
    }
  }

  TEST_CASE("sign flip frequency is one half") {
    const SvdEncoding e = svd_encodings(identity(2), 1);
    Rng rng(17);
    int flips = 0;
    const int draws = 10000;
    for (int t = 0; t < draws; ++t) {
      flips += sign_flip_augment(e, rng).u_hat.at({0, 0}) != e.u_hat.at({0, 0});
    }
    CHECK(std::abs(flips / static_cast<double>(draws) - 0.5) <= 0.02);
  }

  TEST_CASE("laplacian of K4") {
    Tensor a({4, 4}, 1.0);
    const Tensor vals = laplacian_eigenvalues(a, 3);
    const Tensor vecs = laplacian_encodings(a, 3);
    CHECK(vecs.shape() == Shape{4, 3});
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(vals[k] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
      double dot = 0.0, norm = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        dot += vecs.at({i, k});
        norm += vecs.at({i, k}) * vecs.at({i, k});
      }
      CHECK(std::abs(dot) <= 1e-12);
      CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("laplacian eigenpairs on a connected irregular graph") {
    Tensor a = ring(7);
    a.at({0, 3}) = a.at({3, 0}) = 1.0;
    a.at({2, 6}) = a.at({6, 2}) = 1.0;
    const std::size_t k = 4;
    const Tensor vals = laplacian_eigenvalues(a, k);
    const Tensor vecs = laplacian_encodings(a, k);
    const Tensor l = normalized_laplacian(a);
    const Tensor lv = matmul(l, vecs);
    std::vector<double> root_deg(7);
    for (std::size_t i = 0; i < 7; ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < 7; ++j) {
        d += i == j ? 0.0 : a.at({i, j});
      }
      root_deg[i] = std::sqrt(d);
    }
    for (std::size_t c = 0; c < k; ++c) {
      CHECK(vals[c] > 1e-8);
      if (c > 0) {
        CHECK(vals[c] >= vals[c - 1] - 1e-12);
      }
      double null_dot = 0.0;
      for (std::size_t i = 0; i < 7; ++i) {
        CHECK(std::abs(lv.at({i, c}) - vals[c] * vecs.at({i, c})) <= 1e-10);
        null_dot += root_deg[i] * vecs.at({i, c});
      }
      CHECK(std::abs(null_dot) <= 1e-10);
    }
    // Self-loops in the input are ignored.
    Tensor looped = a;
    for (std::size_t i = 0; i < 7; ++i) {
      looped.at({i, i}) = 1.0;
    }
    CHECK(max_abs_diff(laplacian_eigenvalues(looped, k), vals) <= 1e-12);
  }

  TEST_CASE("laplacian rejects asymmetric input") {
    Tensor a = ring(5);
    a.at({0, 1}) = 0.0;
    CHECK_THROWS_AS(laplacian_encodings(a, 2), Error);
  }

  TEST_CASE("compute_encoding pads to a fixed width") {
    const Tensor a = ring(3);
    const Tensor svd = compute_encoding(EncodingKind::svd, a, 5);
    CHECK(svd.shape() == Shape{3, 10});
    const Tensor full = compute_encoding(EncodingKind::svd, a, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(svd.at({i, c}) == full.at({i, c}));
        CHECK(svd.at({i, 5 + c}) == full.at({i, 3 + c}));
      }
      for (std::size_t c = 3; c < 5; ++c) {
        CHECK(svd.at({i, c}) == 0.0);
        CHECK(svd.at({i, 5 + c}) == 0.0);
      }
    }
    const Tensor lap = compute_encoding(EncodingKind::laplacian, a, 4);
    CHECK(lap.shape() == Shape{3, 4});
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(lap.at({i, 2}) == 0.0);
      CHECK(lap.at({i, 3}) == 0.0);
    }
  }

  TEST_CASE("encoding cache is bit identical and persists") {
    EncodingCache cache;
    const Tensor a = random_graph(9, 0.3, 21, true);
    const EncodingCache::Key key{"corpus", 0, EncodingKind::svd, 3};
    const Tensor first = cache.get(key, a);
    CHECK(cache.misses() == 1);
    CHECK(cache.get(key, a) == first);
    CHECK(cache.misses() == 1);
    CHECK(first == compute_encoding(EncodingKind::svd, a, 3));
    cache.get({"corpus", 1, EncodingKind::laplacian, 2}, a);

    const auto path = std::filesystem::temp_directory_path() / "egt_unit_cache.jsonl";
    cache.save(path);
    EncodingCache loaded;
    loaded.load(path);
    CHECK(loaded.size() == 2);
    CHECK(loaded.get(key, Tensor({9, 9})) == first);
    CHECK(loaded.misses() == 0);
  }
}
