#include "egt/posenc.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "egt/error.hpp"
#include "egt/svd.hpp"
#include "json.hpp"

namespace egt {

namespace {

// Eigenvalues below this are treated as the Laplacian null space.
constexpr double kNullEigenvalue = 1e-9;

void require_square(const Tensor& a, const char* what) {
  require(a.rank() == 2 && a.dim(0) == a.dim(1) && a.dim(0) >= 1, std::string(what) + ": expected a square matrix");
}

}  // namespace

Tensor rebuild_gamma(const Tensor& u_hat, const Tensor& v_hat) {
  const std::size_t n = u_hat.dim(0);
  const std::size_t r = u_hat.dim(1);
  Tensor gamma({n, 2 * r});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < r; ++k) {
      gamma[i * 2 * r + k] = u_hat[i * r + k];
      gamma[i * 2 * r + r + k] = v_hat[i * r + k];
    }
  }
  return gamma;
}

SvdEncoding svd_encodings(const Tensor& adjacency, std::size_t rank) {
  require_square(adjacency, "svd_encodings");
  const std::size_t n = adjacency.dim(0);
  require(rank >= 1 && rank <= n, "svd_encodings: rank must lie in [1, n]");
  const SvdResult d = svd(adjacency);
  SvdEncoding enc;
  enc.rank = rank;
  enc.u_hat = Tensor({n, rank});
  enc.v_hat = Tensor({n, rank});
  for (std::size_t k = 0; k < rank; ++k) {
    const double root = std::sqrt(d.sigma[k]);
    for (std::size_t i = 0; i < n; ++i) {
      enc.u_hat[i * rank + k] = d.u[i * n + k] * root;
      enc.v_hat[i * rank + k] = d.v[i * n + k] * root;
    }
  }
  enc.gamma_hat = rebuild_gamma(enc.u_hat, enc.v_hat);
  return enc;
}

SvdEncoding apply_sign_flips(const SvdEncoding& encoding, const std::vector<bool>& flips) {
  require(flips.size() == encoding.rank, "sign flips: one flag per retained singular pair required");
  SvdEncoding out = encoding;
  const std::size_t n = encoding.u_hat.dim(0);
  const std::size_t r = encoding.rank;
  for (std::size_t k = 0; k < r; ++k) {
    if (!flips[k]) {
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      out.u_hat[i * r + k] = -out.u_hat[i * r + k];
      out.v_hat[i * r + k] = -out.v_hat[i * r + k];
    }
  }
  out.gamma_hat = rebuild_gamma(out.u_hat, out.v_hat);
  return out;
}

SvdEncoding sign_flip_augment(const SvdEncoding& encoding, Rng& rng) {
  std::vector<bool> flips(encoding.rank);
  for (std::size_t k = 0; k < encoding.rank; ++k) {
    flips[k] = rng.bernoulli(0.5);
  }
  return apply_sign_flips(encoding, flips);
}

namespace {

struct LaplacianSpectrum {
  Tensor vectors;  // [n, k]
  Tensor values;   // [k]
};

LaplacianSpectrum laplacian_spectrum(const Tensor& adjacency, std::size_t k) {
  require_square(adjacency, "laplacian_encodings");
  const std::size_t n = adjacency.dim(0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      require(adjacency[i * n + j] == adjacency[j * n + i],
              "laplacian_encodings: adjacency is not symmetric; Laplacian eigenvectors can be complex-valued "
              "for directed graphs");
    }
  }
  require(k <= n - 1, "laplacian_encodings: k must be at most n - 1");
  std::vector<double> inv_sqrt_degree(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) {
        degree += adjacency[i * n + j];
      }
    }
    inv_sqrt_degree[i] = degree > 0.0 ? 1.0 / std::sqrt(degree) : 0.0;
  }
  Tensor laplacian({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = i == j ? 0.0 : adjacency[i * n + j];
      laplacian[i * n + j] = (i == j ? 1.0 : 0.0) - inv_sqrt_degree[i] * a * inv_sqrt_degree[j];
    }
  }
  // Symmetric PSD, so singular pairs are eigenpairs (singular values descending).
  const SvdResult d = svd(laplacian);
  std::vector<std::size_t> picked;
  for (std::size_t idx = n; idx-- > 0 && picked.size() < k;) {
    if (d.sigma[idx] > kNullEigenvalue) {
      picked.push_back(idx);
    }
  }
  LaplacianSpectrum out{Tensor({n, k}), Tensor({k})};
  for (std::size_t c = 0; c < picked.size(); ++c) {
    const std::size_t idx = picked[c];
    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (std::abs(d.v[i * n + idx]) > std::abs(d.v[peak * n + idx])) {
        peak = i;
      }
    }
    const double sign = d.v[peak * n + idx] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      out.vectors[i * k + c] = sign * d.v[i * n + idx];
    }
    out.values[c] = d.sigma[idx];
  }
  return out;
}

}  // namespace

Tensor laplacian_encodings(const Tensor& adjacency, std::size_t k) { return laplacian_spectrum(adjacency, k).vectors; }

Tensor laplacian_eigenvalues(const Tensor& adjacency, std::size_t k) { return laplacian_spectrum(adjacency, k).values; }

Tensor compute_encoding(EncodingKind kind, const Tensor& adjacency, std::size_t rank) {
  require_square(adjacency, "compute_encoding");
  const std::size_t n = adjacency.dim(0);
  if (kind == EncodingKind::svd) {
    const std::size_t r = std::min(rank, n);
    const SvdEncoding enc = svd_encodings(adjacency, r);
    Tensor gamma({n, 2 * rank});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < r; ++c) {
        gamma[i * 2 * rank + c] = enc.u_hat[i * r + c];
        gamma[i * 2 * rank + rank + c] = enc.v_hat[i * r + c];
      }
    }
    return gamma;
  }
  const std::size_t k = std::min(rank, n - 1);
  Tensor out({n, rank});
  if (k == 0) {
    return out;
  }
  const Tensor vectors = laplacian_encodings(adjacency, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      out[i * rank + c] = vectors[i * k + c];
    }
  }
  return out;
}

const Tensor& EncodingCache::get(const Key& key, const Tensor& adjacency) {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    ++misses_;
    it = entries_.emplace(key, compute_encoding(std::get<2>(key), adjacency, std::get<3>(key))).first;
  }
  return it->second;
}

void EncodingCache::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot open encoding cache " + path.string() + " for writing");
  for (const auto& [key, value] : entries_) {
    nlohmann::json rec{{"corpus", std::get<0>(key)},
                       {"graph", std::get<1>(key)},
                       {"kind", std::get<2>(key) == EncodingKind::svd ? "svd" : "laplacian"},
                       {"rank", std::get<3>(key)},
                       {"shape", value.shape()},
                       {"values", value.storage()}};
    out << rec.dump() << '\n';
  }
}

void EncodingCache::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open encoding cache " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      const auto rec = nlohmann::json::parse(line);
      const std::string kind = rec.at("kind").get<std::string>();
      require(kind == "svd" || kind == "laplacian", "unknown encoding kind " + kind);
      Key key{rec.at("corpus").get<std::string>(), rec.at("graph").get<std::size_t>(),
              kind == "svd" ? EncodingKind::svd : EncodingKind::laplacian, rec.at("rank").get<std::size_t>()};
      entries_[key] = Tensor(rec.at("shape").get<Shape>(), rec.at("values").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      fail(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace egt
