#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "egt/graph.hpp"
#include "egt/tensor.hpp"

namespace egt {

// Graphs zero-padded to a common node count, with masks that keep padded
// positions out of attention, pooling, and losses.
struct GraphBatch {
  std::size_t size = 0;
  std::size_t max_n = 0;
  std::vector<std::size_t> node_counts;
  TaskKind task = TaskKind::node_label;
  std::vector<std::uint8_t> directed;  // per graph
  std::vector<std::uint8_t> weighted;  // per graph

  Tensor adjacency;                // [b, n, n] raw adjacency as stored in the graphs
  Mask node_mask;                  // [b, n]
  Mask pair_mask;                  // [b, n, n] outer-and of node_mask
  Mask structure_mask;             // [b, n, n] a_ij != 0 or i == j, inside pair_mask
  std::vector<int> structure_ids;  // [b, n, n] 0/1 adjacency with self-loops

  FeatureKind node_kind = FeatureKind::none;
  std::size_t node_dim = 0;
  std::vector<int> node_ids;  // [b, n]
  Tensor node_values;         // [b, n, node_dim]

  FeatureKind edge_kind = FeatureKind::none;
  std::size_t edge_dim = 0;
  Mask edge_feature_mask;     // [b, n, n] where a feature exists (raw a_ij != 0)
  std::vector<int> edge_ids;  // [b, n, n], 0 where absent
  Tensor edge_values;         // [b, n, n, edge_dim]

  // Item-level targets. Items are nodes [b, n], pairs [b, n, n], or graphs [b].
  std::vector<int> labels;
  std::vector<double> values;
  Mask target_mask;

  // Positional encodings [b, n, width], zero-padded; empty when unused.
  Tensor pe;
};

// Requires a non-empty list with one task kind and one feature layout.
GraphBatch make_batch(std::span<const Graph* const> graphs);
GraphBatch make_batch(std::span<const Graph> graphs);

// Inverse of make_batch over the real (unpadded) region.
std::vector<Graph> unbatch(const GraphBatch& batch);

}  // namespace egt
