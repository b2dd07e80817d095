#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

#include "doctest.h"
#include "egt/batch.hpp"
#include "egt/corpus.hpp"
#include "egt/error.hpp"
#include "egt/rng.hpp"
#include "egt/sbm.hpp"

using namespace egt;

namespace {

Graph path_graph() {
  Graph g;
  g.n = 2;
  g.adjacency = {0.0, 1.0, 1.0, 0.0};
  g.task = TaskKind::graph_scalar;
  g.graph_value = 0.25;
  return g;
}

Graph small_node_graph(std::size_t n, int offset) {
  Graph g;
  g.n = n;
  g.adjacency.assign(n * n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    g.adjacency[i * n + i + 1] = g.adjacency[(i + 1) * n + i] = 1.0;
  }
  g.node_kind = FeatureKind::discrete;
  g.edge_kind = FeatureKind::discrete;
  g.edge_ids.assign(n * n, -1);
  for (std::size_t p = 0; p < n * n; ++p) {
    if (g.adjacency[p] != 0.0) {
      g.edge_ids[p] = static_cast<int>(p % 3);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    g.node_ids.push_back(static_cast<int>((i + static_cast<std::size_t>(offset)) % 4));
    g.node_labels.push_back(static_cast<int>(i % 2));
  }
  return g;
}

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "egt_unit_graphdata";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Corpus sbm_as_corpus(const SbmConfig& cfg, std::uint64_t seed, std::size_t count) {
  Corpus c;
  c.task = task_kind(cfg.task);
  c.num_classes = num_classes(cfg);
  c.node_vocab = node_vocab(cfg);
  c.graphs = sbm_corpus(cfg, seed, count);
  return c;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("graphdata") {
  TEST_CASE("graph validation rejects broken invariants") {
    Graph g = small_node_graph(3, 0);
    CHECK_NOTHROW(validate(g));
    Graph asym = g;
    asym.adjacency[1] = 0.0;
    CHECK_THROWS_AS(validate(asym), Error);
    asym.directed = true;
    asym.edge_ids[1] = -1;
    CHECK_NOTHROW(validate(asym));
    Graph stray = g;
    stray.edge_ids[2] = 1;  // no edge between 0 and 2
    CHECK_THROWS_AS(validate(stray), Error);
    Graph weighted = g;
    weighted.adjacency[1] = weighted.adjacency[3] = 0.5;
    CHECK_THROWS_AS(validate(weighted), Error);
    weighted.weighted = true;
    CHECK_NOTHROW(validate(weighted));
    Graph wrong_task = g;
    wrong_task.task = TaskKind::graph_label;
    CHECK_THROWS_AS(validate(wrong_task), Error);
  }

  TEST_CASE("sbm config validation") {
    SbmConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.p_inter = 0.6;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = SbmConfig{};
    cfg.communities = 1;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = SbmConfig{};
    cfg.n_min = 10;
    cfg.n_max = 9;
    CHECK_THROWS_AS(validate(cfg), Error);
  }

  TEST_CASE("sbm with degenerate probabilities is block diagonal") {
    SbmConfig cfg;
    cfg.p_intra = 1.0;
    cfg.p_inter = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SbmSample s = sbm_sample(cfg, seed);
      const Graph& g = s.graph;
      for (std::size_t i = 0; i < g.n; ++i) {
        for (std::size_t j = 0; j < g.n; ++j) {
          CHECK(g.a(i, j) == (s.community[i] == s.community[j] ? 1.0 : 0.0));
        }
      }
    }
  }

  TEST_CASE("sbm generation is deterministic and well formed") {
    SbmConfig cfg;
    CHECK(sbm_generate(cfg, 42) == sbm_generate(cfg, 42));
    CHECK(!(sbm_generate(cfg, 42) == sbm_generate(cfg, 43)));
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const SbmSample s = sbm_sample(cfg, seed);
      const Graph& g = s.graph;
      validate(g);
      CHECK(g.n >= cfg.n_min);
      CHECK(g.n <= cfg.n_max);
      std::size_t sizes[2] = {0, 0};
      std::size_t hints = 0;
      for (std::size_t i = 0; i < g.n; ++i) {
        CHECK(g.a(i, i) == 1.0);
        ++sizes[s.community[i]];
        for (std::size_t j = 0; j < g.n; ++j) {
          CHECK(g.a(i, j) == g.a(j, i));
        }
        if (s.hinted[i]) {
          ++hints;
          CHECK(g.node_ids[i] == s.community[i] + 1);
          CHECK(g.node_labels[i] == -1);
        } else {
          CHECK(g.node_ids[i] == 0);
          CHECK(g.node_labels[i] == s.community[i]);
        }
      }
      // Round-robin assignment keeps community sizes within one.
      CHECK((sizes[0] > sizes[1] ? sizes[0] - sizes[1] : sizes[1] - sizes[0]) <= 1);
      CHECK(hints == static_cast<std::size_t>(std::lround(cfg.hint_fraction * static_cast<double>(g.n))));
    }
  }

  TEST_CASE("sbm edge densities match the configured probabilities") {
    // Monte Carlo estimate over 1000 graphs.
    SbmConfig cfg;
    cfg.p_intra = 0.5;
    cfg.p_inter = 0.1;
    double intra_edges = 0.0, intra_pairs = 0.0, inter_edges = 0.0, inter_pairs = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      const SbmSample s = sbm_sample(cfg, derive_seed(7, seed));
      for (std::size_t i = 0; i < s.graph.n; ++i) {
        for (std::size_t j = i + 1; j < s.graph.n; ++j) {
          const bool same = s.community[i] == s.community[j];
          (same ? intra_pairs : inter_pairs) += 1.0;
          (same ? intra_edges : inter_edges) += s.graph.a(i, j);
        }
      }
    }
    CHECK(std::abs(intra_edges / intra_pairs - 0.5) <= 0.02);
    CHECK(std::abs(inter_edges / inter_pairs - 0.1) <= 0.02);
  }

  TEST_CASE("sbm edge and graph tasks") {
    SbmConfig cfg;
    cfg.task = SbmTask::same_community_edges;
    const SbmSample e = sbm_sample(cfg, 3);
    CHECK(e.graph.task == TaskKind::edge_label);
    for (std::size_t i = 0; i < e.graph.n; ++i) {
      for (std::size_t j = 0; j < e.graph.n; ++j) {
        const int label = e.graph.edge_labels[i * e.graph.n + j];
        CHECK(label == (i == j ? -1 : (e.community[i] == e.community[j] ? 1 : 0)));
      }
    }
    cfg.task = SbmTask::majority_community_graph;
    cfg.communities = 3;
    cfg.hint_fraction = 0.3;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const SbmSample g = sbm_sample(cfg, seed);
      std::vector<int> counts(3, 0);
      for (std::size_t i = 0; i < g.graph.n; ++i) {
        if (g.hinted[i]) {
          ++counts[g.community[i]];
        }
      }
      const int best = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      CHECK(g.graph.graph_label == best);
    }
  }

  TEST_CASE("sbm corpus graphs are independent of generation order") {
    SbmConfig cfg;
    const auto all = sbm_corpus(cfg, 11, 20);
    for (std::size_t i = 0; i < all.size(); ++i) {
      CHECK(all[i] == sbm_generate(cfg, derive_seed(11, i)));
    }
  }

  TEST_CASE("make_batch masks and padding") {
    const std::vector<Graph> one{small_node_graph(4, 0)};
    const GraphBatch b1 = make_batch(std::span<const Graph>(one));
    CHECK(b1.max_n == 4);
    CHECK(b1.node_mask.count() == 4);

    const std::vector<Graph> two{small_node_graph(3, 0), small_node_graph(5, 1)};
    const GraphBatch b = make_batch(std::span<const Graph>(two));
    CHECK(b.max_n == 5);
    std::size_t row0 = 0, row1 = 0, pairs0 = 0, pairs1 = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      row0 += b.node_mask[i];
      row1 += b.node_mask[5 + i];
      for (std::size_t j = 0; j < 5; ++j) {
        pairs0 += b.pair_mask[i * 5 + j];
        pairs1 += b.pair_mask[25 + i * 5 + j];
        for (std::size_t g = 0; g < 2; ++g) {
          CHECK(b.pair_mask[g * 25 + i * 5 + j] == (b.node_mask[g * 5 + i] && b.node_mask[g * 5 + j]));
        }
      }
    }
    CHECK(row0 == 3);
    CHECK(row1 == 5);
    CHECK(pairs0 == 9);
    CHECK(pairs1 == 25);
    // Padded region is zero-filled.
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        if (i >= 3 || j >= 3) {
          CHECK(b.adjacency[i * 5 + j] == 0.0);
          CHECK(b.edge_ids[i * 5 + j] == 0);
          CHECK(!b.structure_mask[i * 5 + j]);
        }
      }
      if (i >= 3) {
        CHECK(b.node_ids[i] == 0);
        CHECK(!b.target_mask[i]);
      }
    }
    // Self-loops are added for the model input, not in the raw adjacency.
    CHECK(b.adjacency[0] == 0.0);
    CHECK(b.structure_ids[0] == 1);
    CHECK(b.structure_mask[0]);
  }

  TEST_CASE("make_batch errors") {
    CHECK_THROWS_AS(make_batch(std::span<const Graph>()), Error);
    std::vector<Graph> mixed{small_node_graph(3, 0), path_graph()};
    CHECK_THROWS_AS(make_batch(std::span<const Graph>(mixed)), Error);
  }

  TEST_CASE("unbatch recovers every graph") {
    SbmConfig cfg;
    for (SbmTask task : {SbmTask::community_nodes, SbmTask::same_community_edges, SbmTask::majority_community_graph}) {
      cfg.task = task;
      const auto graphs = sbm_corpus(cfg, 5, 7);
      const auto back = unbatch(make_batch(std::span<const Graph>(graphs)));
      REQUIRE(back.size() == graphs.size());
      for (std::size_t i = 0; i < graphs.size(); ++i) {
        CHECK(back[i] == graphs[i]);
      }
    }
    const std::vector<Graph> featured{small_node_graph(3, 0), small_node_graph(6, 2)};
    const auto back = unbatch(make_batch(std::span<const Graph>(featured)));
    CHECK(back == featured);
  }

  TEST_CASE("corpus round trip of a featureless path graph") {
    Corpus c;
    c.task = TaskKind::graph_scalar;
    c.graphs = {path_graph()};
    const auto path = temp_path("path.jsonl");
    save_corpus(c, path);
    CHECK(load_corpus(path) == c);
  }

  TEST_CASE("corpus round trip of generated corpora") {
    SbmConfig cfg;
    const Corpus big = sbm_as_corpus(cfg, 9, 1000);
    CHECK(parse_corpus(serialize_corpus(big)) == big);
    cfg.task = SbmTask::same_community_edges;
    const Corpus edges = sbm_as_corpus(cfg, 10, 50);
    const auto path = temp_path("edges.jsonl");
    save_corpus(edges, path);
    CHECK(load_corpus(path) == edges);
    Corpus featured;
    featured.task = TaskKind::node_label;
    featured.num_classes = 2;
    featured.node_vocab = 4;
    featured.edge_vocab = 3;
    featured.graphs = {small_node_graph(3, 0), small_node_graph(5, 1)};
    featured.graphs[1].directed = true;
    CHECK(parse_corpus(serialize_corpus(featured)) == featured);
    CHECK(corpus_fingerprint(featured) == corpus_fingerprint(parse_corpus(serialize_corpus(featured))));
    CHECK(corpus_fingerprint(featured) != corpus_fingerprint(edges));
  }

  TEST_CASE("corpus errors name the offending line") {
    SbmConfig cfg;
    const std::string text = serialize_corpus(sbm_as_corpus(cfg, 1, 4));
    // Truncated mid-record: the last line is cut in half.
    const std::string cut = text.substr(0, text.size() - 40);
    const auto path = temp_path("cut.jsonl");
    std::ofstream(path) << cut;
    const std::string msg = error_of([&] { load_corpus(path); });
    CHECK(msg.find("line 5") != std::string::npos);

    // Whole records missing: detected against the header count.
    std::string dropped = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
    CHECK(error_of([&] { parse_corpus(dropped); }).find("expected 4 graph records") != std::string::npos);

    std::string versioned = text;
    versioned.replace(versioned.find("\"version\":1"), 11, "\"version\":9");
    CHECK(error_of([&] { parse_corpus(versioned); }).find("version") != std::string::npos);

    std::string garbage = text;
    garbage.insert(garbage.find('\n') + 1, "not json\n");
    CHECK(error_of([&] { parse_corpus(garbage); }).find("line 2") != std::string::npos);

    CHECK_THROWS_AS(load_corpus(temp_path("missing.jsonl")), Error);
  }

  TEST_CASE("permute_nodes relabels consistently") {
    Graph g = small_node_graph(4, 0);
    g.directed = true;
    g.adjacency[0 * 4 + 2] = 1.0;
    g.edge_ids[0 * 4 + 2] = 2;
    const std::vector<std::size_t> perm{2, 0, 3, 1};
    const Graph p = permute_nodes(g, perm);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(p.node_ids[perm[i]] == g.node_ids[i]);
      for (std::size_t j = 0; j < 4; ++j) {
        CHECK(p.a(perm[i], perm[j]) == g.a(i, j));
        CHECK(p.edge_ids[perm[i] * 4 + perm[j]] == g.edge_ids[i * 4 + j]);
      }
    }
    CHECK_NOTHROW(validate(p));
  }
}
