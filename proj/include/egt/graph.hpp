#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace egt {

enum class FeatureKind { none, discrete, continuous };
enum class TaskKind { node_label, graph_label, graph_scalar, edge_label };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(TaskKind kind);
FeatureKind parse_feature_kind(std::string_view text);
TaskKind parse_task_kind(std::string_view text);
bool is_classification(TaskKind kind);

// One attributed graph. Dense n x n storage throughout; desk-scale graphs are
// small and every consumer (batching, SVD, attention) wants dense layout.
struct Graph {
  std::size_t n = 0;
  bool directed = false;
  bool weighted = false;
  std::vector<double> adjacency;  // a_ij, row-major [n, n]

  FeatureKind node_kind = FeatureKind::none;
  std::size_t node_dim = 0;         // continuous width
  std::vector<int> node_ids;        // [n] when discrete
  std::vector<double> node_values;  // [n, node_dim] when continuous

  // Edge features exist exactly where a_ij != 0.
  FeatureKind edge_kind = FeatureKind::none;
  std::size_t edge_dim = 0;
  std::vector<int> edge_ids;        // [n, n], -1 where no edge
  std::vector<double> edge_values;  // [n, n, edge_dim], zero where no edge

  TaskKind task = TaskKind::node_label;
  std::vector<int> node_labels;  // [n], -1 marks an unlabeled node
  int graph_label = -1;
  double graph_value = 0.0;
  std::vector<int> edge_labels;  // [n, n], -1 marks an unlabeled pair

  double a(std::size_t i, std::size_t j) const { return adjacency[i * n + j]; }
  bool has_edge(std::size_t i, std::size_t j) const { return adjacency[i * n + j] != 0.0; }

  bool operator==(const Graph& other) const = default;
};

// Checks every structural invariant; throws egt::Error describing the first
// violation.
void validate(const Graph& g);

// Copy with a_ii = 1 for every node.
Graph with_self_loops(Graph g);

// Relabels nodes: node i of `g` becomes node perm[i] of the result.
Graph permute_nodes(const Graph& g, const std::vector<std::size_t>& perm);

}  // namespace egt
