#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "egt/graph.hpp"

namespace egt {

enum class SbmTask {
  community_nodes,          // per-node community labels
  same_community_edges,     // per-pair "same community" labels
  majority_community_graph  // graph label: community holding most revealed hints
};

std::string_view to_string(SbmTask task);
SbmTask parse_sbm_task(std::string_view text);

struct SbmConfig {
  std::size_t n_min = 20;
  std::size_t n_max = 30;
  int communities = 2;
  double p_intra = 0.5;
  double p_inter = 0.05;
  SbmTask task = SbmTask::community_nodes;
  double hint_fraction = 0.1;
};

void validate(const SbmConfig& cfg);

TaskKind task_kind(SbmTask task);
int num_classes(const SbmConfig& cfg);
// Node feature vocabulary: id 0 is "unknown", id c+1 reveals community c.
int node_vocab(const SbmConfig& cfg);

struct SbmSample {
  Graph graph;
  std::vector<int> community;
  std::vector<bool> hinted;
};

// Deterministic in (cfg, seed). The graph carries self-loops and symmetric
// adjacency.
SbmSample sbm_sample(const SbmConfig& cfg, std::uint64_t seed);
Graph sbm_generate(const SbmConfig& cfg, std::uint64_t seed);

// Graph i uses derive_seed(base_seed, i), so any subset can be regenerated
// independently.
std::vector<Graph> sbm_corpus(const SbmConfig& cfg, std::uint64_t base_seed, std::size_t count);

}  // namespace egt
