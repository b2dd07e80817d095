#include "egt/batch.hpp"

#include <algorithm>

#include "egt/error.hpp"

namespace egt {

GraphBatch make_batch(std::span<const Graph> graphs) {
  std::vector<const Graph*> ptrs;
  ptrs.reserve(graphs.size());
  for (const Graph& g : graphs) {
    ptrs.push_back(&g);
  }
  return make_batch(std::span<const Graph* const>(ptrs));
}

GraphBatch make_batch(std::span<const Graph* const> graphs) {
  require(!graphs.empty(), "make_batch: empty graph list");
  const Graph& first = *graphs.front();
  GraphBatch batch;
  batch.size = graphs.size();
  batch.task = first.task;
  batch.node_kind = first.node_kind;
  batch.node_dim = first.node_dim;
  batch.edge_kind = first.edge_kind;
  batch.edge_dim = first.edge_dim;
  for (const Graph* g : graphs) {
    require(g->task == first.task, "make_batch: heterogeneous task kinds (" + std::string(to_string(first.task)) +
                                       " vs " + std::string(to_string(g->task)) + ")");
    require(g->node_kind == first.node_kind && g->node_dim == first.node_dim,
            "make_batch: heterogeneous node feature layouts");
    require(g->edge_kind == first.edge_kind && g->edge_dim == first.edge_dim,
            "make_batch: heterogeneous edge feature layouts");
    batch.directed.push_back(g->directed ? 1 : 0);
    batch.weighted.push_back(g->weighted ? 1 : 0);
    batch.max_n = std::max(batch.max_n, g->n);
    batch.node_counts.push_back(g->n);
  }

  const std::size_t b = batch.size;
  const std::size_t m = batch.max_n;
  batch.adjacency = Tensor({b, m, m});
  batch.node_mask = Mask({b, m});
  batch.pair_mask = Mask({b, m, m});
  batch.structure_mask = Mask({b, m, m});
  batch.structure_ids.assign(b * m * m, 0);
  batch.node_ids.assign(b * m, 0);
  batch.node_values = Tensor({b, m, batch.node_dim});
  batch.edge_feature_mask = Mask({b, m, m});
  batch.edge_ids.assign(b * m * m, 0);
  batch.edge_values = Tensor({b, m, m, batch.edge_dim});

  std::size_t items_per_graph = 1;
  if (batch.task == TaskKind::node_label) {
    items_per_graph = m;
  } else if (batch.task == TaskKind::edge_label) {
    items_per_graph = m * m;
  }
  batch.labels.assign(b * items_per_graph, 0);
  batch.values.assign(b * items_per_graph, 0.0);
  batch.target_mask = Mask(batch.task == TaskKind::node_label   ? Shape{b, m}
                           : batch.task == TaskKind::edge_label ? Shape{b, m, m}
                                                                : Shape{b});

  for (std::size_t s = 0; s < b; ++s) {
    const Graph& g = *graphs[s];
    const std::size_t n = g.n;
    for (std::size_t i = 0; i < n; ++i) {
      batch.node_mask.set(s * m + i, true);
      if (g.node_kind == FeatureKind::discrete) {
        batch.node_ids[s * m + i] = g.node_ids[i];
      } else if (g.node_kind == FeatureKind::continuous) {
        std::copy_n(g.node_values.begin() + static_cast<std::ptrdiff_t>(i * g.node_dim), g.node_dim,
                    batch.node_values.data().begin() + static_cast<std::ptrdiff_t>((s * m + i) * g.node_dim));
      }
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = i * n + j;
        const std::size_t dst = (s * m + i) * m + j;
        batch.adjacency[dst] = g.adjacency[src];
        batch.pair_mask.set(dst, true);
        const bool connected = g.adjacency[src] != 0.0 || i == j;
        batch.structure_mask.set(dst, connected);
        batch.structure_ids[dst] = connected ? 1 : 0;
        if (g.edge_kind != FeatureKind::none && g.adjacency[src] != 0.0) {
          batch.edge_feature_mask.set(dst, true);
          if (g.edge_kind == FeatureKind::discrete) {
            batch.edge_ids[dst] = g.edge_ids[src];
          } else {
            std::copy_n(g.edge_values.begin() + static_cast<std::ptrdiff_t>(src * g.edge_dim), g.edge_dim,
                        batch.edge_values.data().begin() + static_cast<std::ptrdiff_t>(dst * g.edge_dim));
          }
        }
        if (g.task == TaskKind::edge_label && g.edge_labels[src] >= 0) {
          batch.labels[dst] = g.edge_labels[src];
          batch.target_mask.set(dst, true);
        }
      }
      if (g.task == TaskKind::node_label && g.node_labels[i] >= 0) {
        batch.labels[s * m + i] = g.node_labels[i];
        batch.target_mask.set(s * m + i, true);
      }
    }
    if (g.task == TaskKind::graph_label) {
      batch.labels[s] = g.graph_label;
      batch.target_mask.set(s, true);
    } else if (g.task == TaskKind::graph_scalar) {
      batch.values[s] = g.graph_value;
      batch.target_mask.set(s, true);
    }
  }
  return batch;
}

std::vector<Graph> unbatch(const GraphBatch& batch) {
  const std::size_t m = batch.max_n;
  std::vector<Graph> graphs(batch.size);
  for (std::size_t s = 0; s < batch.size; ++s) {
    Graph& g = graphs[s];
    const std::size_t n = batch.node_counts[s];
    g.n = n;
    g.task = batch.task;
    g.adjacency.assign(n * n, 0.0);
    g.node_kind = batch.node_kind;
    g.node_dim = batch.node_dim;
    g.edge_kind = batch.edge_kind;
    g.edge_dim = batch.edge_dim;
    if (g.node_kind == FeatureKind::discrete) {
      g.node_ids.resize(n);
    } else if (g.node_kind == FeatureKind::continuous) {
      g.node_values.resize(n * g.node_dim);
    }
    if (g.edge_kind == FeatureKind::discrete) {
      g.edge_ids.assign(n * n, -1);
    } else if (g.edge_kind == FeatureKind::continuous) {
      g.edge_values.assign(n * n * g.edge_dim, 0.0);
    }
    if (g.task == TaskKind::node_label) {
      g.node_labels.assign(n, -1);
    } else if (g.task == TaskKind::edge_label) {
      g.edge_labels.assign(n * n, -1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (g.node_kind == FeatureKind::discrete) {
        g.node_ids[i] = batch.node_ids[s * m + i];
      } else if (g.node_kind == FeatureKind::continuous) {
        std::copy_n(batch.node_values.data().begin() + static_cast<std::ptrdiff_t>((s * m + i) * g.node_dim),
                    g.node_dim, g.node_values.begin() + static_cast<std::ptrdiff_t>(i * g.node_dim));
      }
      if (g.task == TaskKind::node_label && batch.target_mask[s * m + i]) {
        g.node_labels[i] = batch.labels[s * m + i];
      }
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = (s * m + i) * m + j;
        const std::size_t dst = i * n + j;
        g.adjacency[dst] = batch.adjacency[src];
        if (batch.edge_feature_mask[src]) {
          if (g.edge_kind == FeatureKind::discrete) {
            g.edge_ids[dst] = batch.edge_ids[src];
          } else {
            std::copy_n(batch.edge_values.data().begin() + static_cast<std::ptrdiff_t>(src * g.edge_dim), g.edge_dim,
                        g.edge_values.begin() + static_cast<std::ptrdiff_t>(dst * g.edge_dim));
          }
        }
        if (g.task == TaskKind::edge_label && batch.target_mask[src]) {
          g.edge_labels[dst] = batch.labels[src];
        }
      }
    }
    if (g.task == TaskKind::graph_label) {
      g.graph_label = batch.labels[s];
    } else if (g.task == TaskKind::graph_scalar) {
      g.graph_value = batch.values[s];
    }
    g.directed = batch.directed[s] != 0;
    g.weighted = batch.weighted[s] != 0;
  }
  return graphs;
}

}  // namespace egt
