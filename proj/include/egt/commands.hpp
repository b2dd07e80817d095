#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "egt/corpus.hpp"
#include "egt/run_config.hpp"
#include "egt/trainer.hpp"
#include "json.hpp"

namespace egt {

// {"record":"header", "command", "timestamp", ...}; the timestamp is the only
// field that varies between identical invocations.
nlohmann::json header_record(const std::string& command, const nlohmann::json& extra = {});

struct DataSplits {
  Corpus train;
  Corpus val;
  Corpus test;
};

// Split s of an SBM run uses base seed derive_seed(data_seed, s), so the three
// splits never share a graph seed.
DataSplits generate_splits(const RunSpec& spec);
DataSplits load_splits(const RunSpec& spec);

struct Aggregate {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single run
};
Aggregate aggregate(const std::vector<double>& values);

// Trains one run per seed on shared data; the model input layout is taken
// from the corpus.
std::vector<RunRecord> train_seeds(const ModelConfig& model, const DataSplits& data, const TrainConfig& train,
                                   const std::vector<std::uint64_t>& seeds, EncodingCache* cache = nullptr);

void cmd_generate(const RunSpec& spec, std::ostream& log);

struct TrainSummary {
  ModelConfig model;
  std::vector<RunRecord> runs;
  Aggregate test;
  Aggregate train;
};
TrainSummary cmd_train(const RunSpec& spec, std::ostream& log);

nlohmann::json cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& corpus,
                        std::ostream& log);

struct GradcheckEntry {
  std::string config;
  std::string tensor;
  double relative_error = 0.0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  bool passed = true;
  double tolerance = 1e-4;
  // Gradients smaller than this are compared absolutely: central differences
  // at h = 1e-5 carry round-off near 1e-11 for O(1) losses.
  double floor = 1e-6;
};

// Tiny two-graph batch (5 and 4 nodes) with discrete node and edge features
// and targets for the configured head.
GraphBatch gradcheck_batch(const ModelConfig& cfg, std::uint64_t seed);
// Compares tape gradients of every parameter tensor with central differences
// (h = 1e-5). `fault_op` corrupts that op's backward pass for negative controls.
GradcheckReport gradcheck_model(const ModelConfig& cfg, std::uint64_t seed, const std::string& fault_op = "",
                                double fault_scale = 1.0);
// The tiny configuration (L=2, d_h=8, d_e=4, H=2, d_k=4) for a given
// variant, gating and head.
ModelConfig gradcheck_config(Variant variant, bool gated, HeadKind head);
GradcheckReport cmd_gradcheck(std::uint64_t seed, std::ostream& log);

struct AblationRow {
  std::string name;
  Variant variant = Variant::egt;
  PeKind pe = PeKind::none;
  std::size_t parameters = 0;
  Aggregate test;
  Aggregate train;
};
std::vector<AblationRow> cmd_ablate(const RunSpec& spec, std::ostream& log);

}  // namespace egt
