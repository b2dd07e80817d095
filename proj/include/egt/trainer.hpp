#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egt/batch.hpp"
#include "egt/corpus.hpp"
#include "egt/model.hpp"
#include "egt/posenc.hpp"
#include "json.hpp"

namespace egt {

struct TrainConfig {
  double lr_init = 5e-4;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 40;
  std::size_t plateau_patience = 10;
  double plateau_factor = 0.5;
  double min_lr = 1e-6;
  std::uint64_t seed = 0;
  std::size_t eval_every = 1;
};

void validate(const TrainConfig& cfg);

// A split with its positional encodings precomputed once per graph.
struct PreparedSplit {
  std::vector<Graph> graphs;
  std::vector<Tensor> encodings;  // [n_g, width] per graph; empty without PE
};

PreparedSplit prepare_split(const Corpus& corpus, const PeConfig& pe, EncodingCache* cache = nullptr,
                            const std::string& corpus_id = "");

GraphBatch batch_of(const PreparedSplit& split, std::span<const std::size_t> indices, const PeConfig& pe);

// Model input layout implied by a corpus.
void configure_for_corpus(ModelConfig& cfg, const Corpus& corpus);

struct Metrics {
  double loss = 0.0;
  double balanced_accuracy = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  double mae = 0.0;
  std::size_t items = 0;

  bool operator==(const Metrics& other) const = default;
};

// Headline metric for the configured head: F1 for binary edge tasks, MAE for
// regression, balanced accuracy otherwise.
double primary_metric(const ModelConfig& cfg, const Metrics& m);
std::string primary_metric_name(const ModelConfig& cfg);

Metrics evaluate(const ModelConfig& cfg, const ParameterStore& params, const PreparedSplit& split,
                 std::span<const double> class_weights, std::size_t batch_size);

// Class counts over the target mask of a split.
std::vector<std::size_t> label_counts(const PreparedSplit& split, std::size_t classes);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the evaluation at initialization
  double train_loss = 0.0;
  Metrics val;
  double lr = 0.0;

  bool operator==(const EpochRecord& other) const = default;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  Metrics train;
  Metrics val;
  Metrics test;
  std::vector<double> class_weights;
  std::vector<std::string> warnings;
  bool diverged = false;
  std::string message;
  ParameterStore params;  // best-validation weights

  bool operator==(const RunRecord& other) const = default;
};

RunRecord train(const ModelConfig& cfg, const PreparedSplit& train_split, const PreparedSplit& val_split,
                const PreparedSplit& test_split, const TrainConfig& tcfg);

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const EpochRecord& e);
// Summary record without the weights.
nlohmann::json summary_json(const RunRecord& r);

}  // namespace egt
