#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "egt/model_config.hpp"
#include "egt/sbm.hpp"
#include "egt/trainer.hpp"
#include "json.hpp"

namespace egt {

// Flat "key = value" text. "[section]" lines prefix the keys that follow with
// "section."; '#' starts a comment. Duplicate keys are errors.
std::map<std::string, std::string> parse_key_values(const std::string& text);

enum class DataSource { sbm, corpus };

struct RunSpec {
  DataSource source = DataSource::sbm;
  SbmConfig sbm;
  std::filesystem::path corpus_dir;  // holds train.jsonl, val.jsonl, test.jsonl
  std::size_t train_count = 300;
  std::size_t val_count = 50;
  std::size_t test_count = 50;
  std::uint64_t data_seed = 1;
  ModelConfig model;
  TrainConfig train;
  std::filesystem::path out_dir = "runs";
  std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  std::vector<Variant> ablate_variants{Variant::egt, Variant::egt_simple, Variant::transformer,
                                       Variant::egt_constrained};
  std::vector<PeKind> ablate_pe{PeKind::none, PeKind::svd};
};

// Unknown keys and out-of-range values are errors.
RunSpec run_spec_from_text(const std::string& text);
RunSpec load_run_spec(const std::filesystem::path& path);
void validate(const RunSpec& spec);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);

nlohmann::json to_json(const RunSpec& spec);

}  // namespace egt
