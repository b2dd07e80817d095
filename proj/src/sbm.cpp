#include "egt/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "egt/error.hpp"
#include "egt/rng.hpp"

namespace egt {

std::string_view to_string(SbmTask task) {
  switch (task) {
    case SbmTask::community_nodes:
      return "community_nodes";
    case SbmTask::same_community_edges:
      return "same_community_edges";
    case SbmTask::majority_community_graph:
      return "majority_community_graph";
  }
  return "community_nodes";
}

SbmTask parse_sbm_task(std::string_view text) {
  for (SbmTask t : {SbmTask::community_nodes, SbmTask::same_community_edges, SbmTask::majority_community_graph}) {
    if (text == to_string(t)) {
      return t;
    }
  }
  fail("unknown SBM task '" + std::string(text) + "'");
}

void validate(const SbmConfig& cfg) {
  require(cfg.communities >= 2, "sbm: need at least two communities");
  require(cfg.n_min >= 1 && cfg.n_min <= cfg.n_max, "sbm: need 1 <= n_min <= n_max");
  require(0.0 <= cfg.p_inter && cfg.p_inter <= cfg.p_intra && cfg.p_intra <= 1.0,
          "sbm: need 0 <= p_inter <= p_intra <= 1");
  require(cfg.hint_fraction >= 0.0 && cfg.hint_fraction <= 1.0, "sbm: hint fraction must lie in [0, 1]");
}

TaskKind task_kind(SbmTask task) {
  switch (task) {
    case SbmTask::community_nodes:
      return TaskKind::node_label;
    case SbmTask::same_community_edges:
      return TaskKind::edge_label;
    case SbmTask::majority_community_graph:
      return TaskKind::graph_label;
  }
  return TaskKind::node_label;
}

int num_classes(const SbmConfig& cfg) {
  return cfg.task == SbmTask::same_community_edges ? 2 : cfg.communities;
}

int node_vocab(const SbmConfig& cfg) { return cfg.communities + 1; }

SbmSample sbm_sample(const SbmConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(
      rng.uniform_int(static_cast<std::int64_t>(cfg.n_min), static_cast<std::int64_t>(cfg.n_max)));
  const auto k = static_cast<std::size_t>(cfg.communities);

  SbmSample sample;
  sample.community.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sample.community[i] = static_cast<int>(i % k);
  }
  rng.shuffle(sample.community);

  Graph& g = sample.graph;
  g.n = n;
  g.directed = false;
  g.adjacency.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    g.adjacency[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = sample.community[i] == sample.community[j] ? cfg.p_intra : cfg.p_inter;
      if (rng.bernoulli(p)) {
        g.adjacency[i * n + j] = 1.0;
        g.adjacency[j * n + i] = 1.0;
      }
    }
  }

  std::vector<std::size_t> nodes(n);
  std::iota(nodes.begin(), nodes.end(), 0);
  rng.shuffle(nodes);
  const auto hints = std::min<std::size_t>(n, static_cast<std::size_t>(std::lround(cfg.hint_fraction * static_cast<double>(n))));
  sample.hinted.assign(n, false);
  for (std::size_t h = 0; h < hints; ++h) {
    sample.hinted[nodes[h]] = true;
  }

  g.node_kind = FeatureKind::discrete;
  g.node_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.node_ids[i] = sample.hinted[i] ? sample.community[i] + 1 : 0;
  }

  g.task = task_kind(cfg.task);
  switch (cfg.task) {
    case SbmTask::community_nodes:
      // Revealed nodes are excluded from the targets; their label is in the input.
      g.node_labels.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        g.node_labels[i] = sample.hinted[i] ? -1 : sample.community[i];
      }
      break;
    case SbmTask::same_community_edges:
      g.edge_labels.assign(n * n, -1);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i != j) {
            g.edge_labels[i * n + j] = sample.community[i] == sample.community[j] ? 1 : 0;
          }
        }
      }
      break;
    case SbmTask::majority_community_graph: {
      std::vector<int> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (sample.hinted[i]) {
          ++counts[static_cast<std::size_t>(sample.community[i])];
        }
      }
      g.graph_label = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      break;
    }
  }
  return sample;
}

Graph sbm_generate(const SbmConfig& cfg, std::uint64_t seed) { return sbm_sample(cfg, seed).graph; }

std::vector<Graph> sbm_corpus(const SbmConfig& cfg, std::uint64_t base_seed, std::size_t count) {
  std::vector<Graph> graphs(count);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
    graphs[static_cast<std::size_t>(i)] = sbm_generate(cfg, derive_seed(base_seed, static_cast<std::uint64_t>(i)));
  }
  return graphs;
}

}  // namespace egt
