#include "egt/corpus.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "egt/error.hpp"

namespace egt {

using nlohmann::json;

namespace {

json graph_to_json(const Graph& g) {
  const std::size_t n = g.n;
  json rec;
  rec["n"] = n;
  rec["directed"] = g.directed;
  rec["weighted"] = g.weighted;
  json edges = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (g.has_edge(i, j)) {
        edges.push_back(g.weighted ? json::array({i, j, g.a(i, j)}) : json::array({i, j}));
      }
    }
  }
  rec["edges"] = std::move(edges);

  json nodes{{"kind", to_string(g.node_kind)}};
  if (g.node_kind == FeatureKind::discrete) {
    nodes["values"] = g.node_ids;
  } else if (g.node_kind == FeatureKind::continuous) {
    nodes["dim"] = g.node_dim;
    nodes["values"] = g.node_values;
  }
  rec["node_features"] = std::move(nodes);

  json edge_features{{"kind", to_string(g.edge_kind)}};
  if (g.edge_kind != FeatureKind::none) {
    json values = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!g.has_edge(i, j)) {
          continue;
        }
        json entry = json::array({i, j});
        if (g.edge_kind == FeatureKind::discrete) {
          entry.push_back(g.edge_ids[i * n + j]);
        } else {
          for (std::size_t c = 0; c < g.edge_dim; ++c) {
            entry.push_back(g.edge_values[(i * n + j) * g.edge_dim + c]);
          }
        }
        values.push_back(std::move(entry));
      }
    }
    if (g.edge_kind == FeatureKind::continuous) {
      edge_features["dim"] = g.edge_dim;
    }
    edge_features["values"] = std::move(values);
  }
  rec["edge_features"] = std::move(edge_features);

  json targets{{"kind", to_string(g.task)}};
  switch (g.task) {
    case TaskKind::node_label:
      targets["values"] = g.node_labels;
      break;
    case TaskKind::edge_label: {
      json values = json::array();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (g.edge_labels[i * n + j] >= 0) {
            values.push_back(json::array({i, j, g.edge_labels[i * n + j]}));
          }
        }
      }
      targets["values"] = std::move(values);
      break;
    }
    case TaskKind::graph_label:
      targets["value"] = g.graph_label;
      break;
    case TaskKind::graph_scalar:
      targets["value"] = g.graph_value;
      break;
  }
  rec["targets"] = std::move(targets);
  return rec;
}

std::size_t checked_index(const json& v, std::size_t n) {
  const auto i = v.get<std::size_t>();
  require(i < n, "node index " + std::to_string(i) + " out of range");
  return i;
}

Graph graph_from_json(const json& rec) {
  Graph g;
  g.n = rec.at("n").get<std::size_t>();
  require(g.n >= 1, "graph has no nodes");
  const std::size_t n = g.n;
  g.directed = rec.at("directed").get<bool>();
  g.weighted = rec.at("weighted").get<bool>();
  g.adjacency.assign(n * n, 0.0);
  for (const json& e : rec.at("edges")) {
    const std::size_t i = checked_index(e.at(0), n);
    const std::size_t j = checked_index(e.at(1), n);
    g.adjacency[i * n + j] = g.weighted ? e.at(2).get<double>() : 1.0;
  }

  const json& nodes = rec.at("node_features");
  g.node_kind = parse_feature_kind(nodes.at("kind").get<std::string>());
  if (g.node_kind == FeatureKind::discrete) {
    g.node_ids = nodes.at("values").get<std::vector<int>>();
  } else if (g.node_kind == FeatureKind::continuous) {
    g.node_dim = nodes.at("dim").get<std::size_t>();
    g.node_values = nodes.at("values").get<std::vector<double>>();
  }

  const json& edges = rec.at("edge_features");
  g.edge_kind = parse_feature_kind(edges.at("kind").get<std::string>());
  if (g.edge_kind == FeatureKind::discrete) {
    g.edge_ids.assign(n * n, -1);
    for (const json& entry : edges.at("values")) {
      const std::size_t i = checked_index(entry.at(0), n);
      const std::size_t j = checked_index(entry.at(1), n);
      g.edge_ids[i * n + j] = entry.at(2).get<int>();
    }
  } else if (g.edge_kind == FeatureKind::continuous) {
    g.edge_dim = edges.at("dim").get<std::size_t>();
    g.edge_values.assign(n * n * g.edge_dim, 0.0);
    for (const json& entry : edges.at("values")) {
      const std::size_t i = checked_index(entry.at(0), n);
      const std::size_t j = checked_index(entry.at(1), n);
      require(entry.size() == 2 + g.edge_dim, "edge feature entry has the wrong width");
      for (std::size_t c = 0; c < g.edge_dim; ++c) {
        g.edge_values[(i * n + j) * g.edge_dim + c] = entry.at(2 + c).get<double>();
      }
    }
  }

  const json& targets = rec.at("targets");
  g.task = parse_task_kind(targets.at("kind").get<std::string>());
  switch (g.task) {
    case TaskKind::node_label:
      g.node_labels = targets.at("values").get<std::vector<int>>();
      break;
    case TaskKind::edge_label:
      g.edge_labels.assign(n * n, -1);
      for (const json& entry : targets.at("values")) {
        const std::size_t i = checked_index(entry.at(0), n);
        const std::size_t j = checked_index(entry.at(1), n);
        g.edge_labels[i * n + j] = entry.at(2).get<int>();
      }
      break;
    case TaskKind::graph_label:
      g.graph_label = targets.at("value").get<int>();
      break;
    case TaskKind::graph_scalar:
      g.graph_value = targets.at("value").get<double>();
      break;
  }
  validate(g);
  return g;
}

json header_json(const Corpus& corpus) {
  return json{{"format", "egt-corpus"},
              {"version", kCorpusFormatVersion},
              {"task", to_string(corpus.task)},
              {"num_classes", corpus.num_classes},
              {"node_vocab", corpus.node_vocab},
              {"edge_vocab", corpus.edge_vocab},
              {"count", corpus.graphs.size()}};
}

}  // namespace

std::string serialize_corpus(const Corpus& corpus) {
  std::string out = header_json(corpus).dump();
  out += '\n';
  for (const Graph& g : corpus.graphs) {
    require(g.task == corpus.task, "corpus contains a graph with a different task kind");
    out += graph_to_json(g).dump();
    out += '\n';
  }
  return out;
}

Corpus parse_corpus(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Corpus corpus;
  std::size_t expected = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      const json rec = json::parse(line);
      if (!have_header) {
        require(rec.at("format").get<std::string>() == "egt-corpus", "not an egt corpus file");
        const int version = rec.at("version").get<int>();
        require(version == kCorpusFormatVersion, "unsupported corpus format version " + std::to_string(version) +
                                                     " (expected " + std::to_string(kCorpusFormatVersion) + ")");
        corpus.task = parse_task_kind(rec.at("task").get<std::string>());
        corpus.num_classes = rec.at("num_classes").get<int>();
        corpus.node_vocab = rec.at("node_vocab").get<int>();
        corpus.edge_vocab = rec.at("edge_vocab").get<int>();
        expected = rec.at("count").get<std::size_t>();
        have_header = true;
        continue;
      }
      Graph g = graph_from_json(rec);
      require(g.task == corpus.task, "graph task differs from the corpus header");
      corpus.graphs.push_back(std::move(g));
    } catch (const json::exception& e) {
      fail("corpus line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  require(have_header, "corpus line 1: missing header record");
  if (corpus.graphs.size() != expected) {
    fail("corpus line " + std::to_string(line_no + 1) + ": expected " + std::to_string(expected) +
         " graph records, found " + std::to_string(corpus.graphs.size()) + " (truncated file?)");
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
  out << serialize_corpus(corpus);
  require(static_cast<bool>(out), "failed writing " + path.string());
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open corpus " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_corpus(buffer.str());
  } catch (const Error& e) {
    fail(path.string() + ": " + e.what());
  }
}

std::string corpus_fingerprint(const Corpus& corpus) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_corpus(corpus)) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

}  // namespace egt
