#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <tuple>

#include "egt/rng.hpp"
#include "egt/tensor.hpp"

namespace egt {

// Rank-r SVD positional encoding of a structural matrix A ~ u_hat v_hat^T,
// u_hat = U[:, :r] sqrt(S), v_hat = V[:, :r] sqrt(S). Row i of gamma_hat is
// the concatenation of row i of u_hat and row i of v_hat.
struct SvdEncoding {
  std::size_t rank = 0;
  Tensor u_hat;      // [n, r]
  Tensor v_hat;      // [n, r]
  Tensor gamma_hat;  // [n, 2r]
};

// Requires 1 <= r <= n.
SvdEncoding svd_encodings(const Tensor& adjacency, std::size_t rank);

// Negates column k of u_hat and v_hat together with probability 1/2 per k, so
// u_hat v_hat^T is unchanged.
SvdEncoding sign_flip_augment(const SvdEncoding& encoding, Rng& rng);
// Applies an explicit flip pattern (flips[k] true negates pair k).
SvdEncoding apply_sign_flips(const SvdEncoding& encoding, const std::vector<bool>& flips);

Tensor rebuild_gamma(const Tensor& u_hat, const Tensor& v_hat);

// Eigenvectors of the k smallest nonzero eigenvalues of the symmetric
// normalized Laplacian of the loop-free adjacency. Columns have unit norm and
// a canonical sign (largest-magnitude entry positive). Throws on asymmetric
// input.
Tensor laplacian_encodings(const Tensor& adjacency, std::size_t k);
// Eigenvalues matching the columns of laplacian_encodings (ascending).
Tensor laplacian_eigenvalues(const Tensor& adjacency, std::size_t k);

enum class EncodingKind { svd, laplacian };

// Precomputed per-graph encodings keyed by (corpus id, graph index, kind, r).
// Values are persisted bit-exactly.
class EncodingCache {
 public:
  using Key = std::tuple<std::string, std::size_t, EncodingKind, std::size_t>;

  // Returns the cached encoding, computing it from `adjacency` on a miss.
  const Tensor& get(const Key& key, const Tensor& adjacency);
  bool contains(const Key& key) const { return entries_.count(key) != 0; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t misses() const noexcept { return misses_; }

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::map<Key, Tensor> entries_;
  std::size_t misses_ = 0;
};

// Encoding matrix used by the model: svd -> gamma_hat [n, 2r], laplacian ->
// [n, r]. Ranks above what the graph supports are zero-filled so every graph
// yields the same width.
Tensor compute_encoding(EncodingKind kind, const Tensor& adjacency, std::size_t rank);

}  // namespace egt
