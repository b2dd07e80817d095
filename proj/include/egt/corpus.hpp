#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "egt/graph.hpp"

namespace egt {

inline constexpr int kCorpusFormatVersion = 1;

struct Corpus {
  TaskKind task = TaskKind::node_label;
  int num_classes = 0;  // 0 for regression
  int node_vocab = 0;   // discrete node feature ids lie in [0, node_vocab)
  int edge_vocab = 0;   // discrete edge feature ids lie in [0, edge_vocab)
  std::vector<Graph> graphs;

  bool operator==(const Corpus& other) const = default;
};

// Line-delimited JSON: one header record (format, version, task, counts) then
// one self-describing record per graph.
std::string serialize_corpus(const Corpus& corpus);
Corpus parse_corpus(const std::string& text);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
// Throws egt::Error naming the offending line on malformed input, a version
// mismatch, or a record count that disagrees with the header.
Corpus load_corpus(const std::filesystem::path& path);

// Stable identifier of the corpus contents (FNV-1a over the serialized form).
std::string corpus_fingerprint(const Corpus& corpus);

}  // namespace egt
