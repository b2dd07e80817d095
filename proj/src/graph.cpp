#include "egt/graph.hpp"

#include <algorithm>
#include <cmath>

#include "egt/error.hpp"

namespace egt {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::none:
      return "none";
    case FeatureKind::discrete:
      return "discrete";
    case FeatureKind::continuous:
      return "continuous";
  }
  return "none";
}

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::node_label:
      return "node_label";
    case TaskKind::graph_label:
      return "graph_label";
    case TaskKind::graph_scalar:
      return "graph_scalar";
    case TaskKind::edge_label:
      return "edge_label";
  }
  return "node_label";
}

FeatureKind parse_feature_kind(std::string_view text) {
  for (FeatureKind k : {FeatureKind::none, FeatureKind::discrete, FeatureKind::continuous}) {
    if (text == to_string(k)) {
      return k;
    }
  }
  fail("unknown feature kind '" + std::string(text) + "'");
}

TaskKind parse_task_kind(std::string_view text) {
  for (TaskKind k : {TaskKind::node_label, TaskKind::graph_label, TaskKind::graph_scalar, TaskKind::edge_label}) {
    if (text == to_string(k)) {
      return k;
    }
  }
  fail("unknown task kind '" + std::string(text) + "'");
}

bool is_classification(TaskKind kind) { return kind != TaskKind::graph_scalar; }

void validate(const Graph& g) {
  const std::size_t n = g.n;
  require(n >= 1, "graph has no nodes");
  require(g.adjacency.size() == n * n, "adjacency size does not match node count");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = g.a(i, j);
      require(std::isfinite(a), "adjacency entry is not finite");
      if (g.weighted) {
        require(a >= 0.0, "weighted adjacency entry is negative");
      } else {
        require(a == 0.0 || a == 1.0, "unweighted adjacency entry outside {0,1}");
      }
      if (!g.directed) {
        require(a == g.a(j, i), "undirected graph has asymmetric adjacency");
      }
    }
  }
  switch (g.node_kind) {
    case FeatureKind::none:
      require(g.node_ids.empty() && g.node_values.empty(), "node features present but kind is none");
      break;
    case FeatureKind::discrete:
      require(g.node_ids.size() == n, "discrete node features need one id per node");
      require(std::all_of(g.node_ids.begin(), g.node_ids.end(), [](int id) { return id >= 0; }),
              "negative node feature id");
      break;
    case FeatureKind::continuous:
      require(g.node_dim >= 1 && g.node_values.size() == n * g.node_dim, "continuous node features size mismatch");
      break;
  }
  switch (g.edge_kind) {
    case FeatureKind::none:
      require(g.edge_ids.empty() && g.edge_values.empty(), "edge features present but kind is none");
      break;
    case FeatureKind::discrete:
      require(g.edge_ids.size() == n * n, "discrete edge features need an n x n id grid");
      for (std::size_t p = 0; p < n * n; ++p) {
        const bool edge = g.adjacency[p] != 0.0;
        require(edge ? g.edge_ids[p] >= 0 : g.edge_ids[p] == -1,
                "edge feature ids must be present exactly where an edge exists");
      }
      break;
    case FeatureKind::continuous:
      require(g.edge_dim >= 1 && g.edge_values.size() == n * n * g.edge_dim, "continuous edge features size mismatch");
      for (std::size_t p = 0; p < n * n; ++p) {
        if (g.adjacency[p] == 0.0) {
          for (std::size_t c = 0; c < g.edge_dim; ++c) {
            require(g.edge_values[p * g.edge_dim + c] == 0.0, "edge feature values present where no edge exists");
          }
        }
      }
      break;
  }
  switch (g.task) {
    case TaskKind::node_label:
      require(g.node_labels.size() == n && g.edge_labels.empty(), "node task needs exactly one label slot per node");
      break;
    case TaskKind::edge_label:
      require(g.edge_labels.size() == n * n && g.node_labels.empty(), "edge task needs an n x n label grid");
      break;
    case TaskKind::graph_label:
      require(g.graph_label >= 0 && g.node_labels.empty() && g.edge_labels.empty(), "graph task needs a graph label");
      break;
    case TaskKind::graph_scalar:
      require(std::isfinite(g.graph_value) && g.node_labels.empty() && g.edge_labels.empty(),
              "regression task needs a finite graph value");
      break;
  }
}

Graph with_self_loops(Graph g) {
  for (std::size_t i = 0; i < g.n; ++i) {
    g.adjacency[i * g.n + i] = 1.0;
  }
  return g;
}

Graph permute_nodes(const Graph& g, const std::vector<std::size_t>& perm) {
  const std::size_t n = g.n;
  require(perm.size() == n, "permutation length does not match node count");
  Graph out = g;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pi = perm[i];
    if (g.node_kind == FeatureKind::discrete) {
      out.node_ids[pi] = g.node_ids[i];
    }
    if (g.node_kind == FeatureKind::continuous) {
      std::copy_n(g.node_values.begin() + static_cast<std::ptrdiff_t>(i * g.node_dim), g.node_dim,
                  out.node_values.begin() + static_cast<std::ptrdiff_t>(pi * g.node_dim));
    }
    if (!g.node_labels.empty()) {
      out.node_labels[pi] = g.node_labels[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t pj = perm[j];
      const std::size_t src = i * n + j;
      const std::size_t dst = pi * n + pj;
      out.adjacency[dst] = g.adjacency[src];
      if (g.edge_kind == FeatureKind::discrete) {
        out.edge_ids[dst] = g.edge_ids[src];
      }
      if (g.edge_kind == FeatureKind::continuous) {
        std::copy_n(g.edge_values.begin() + static_cast<std::ptrdiff_t>(src * g.edge_dim), g.edge_dim,
                    out.edge_values.begin() + static_cast<std::ptrdiff_t>(dst * g.edge_dim));
      }
      if (!g.edge_labels.empty()) {
        out.edge_labels[dst] = g.edge_labels[src];
      }
    }
  }
  return out;
}

}  // namespace egt
