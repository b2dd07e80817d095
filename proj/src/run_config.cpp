#include "egt/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "egt/error.hpp"

namespace egt {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      items.push_back(item);
    }
  }
  return items;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  require(ec == std::errc() && ptr == v.data() + v.size(), "config: " + key + " expects a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == v.size() && !v.empty(), "config: " + key + " expects a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no") {
    return false;
  }
  fail("config: " + key + " expects true/false, got '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream in(text);
  std::string line;
  std::string section;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const std::string where = "config line " + std::to_string(number) + ": ";
    if (line.front() == '[') {
      require(line.back() == ']' && line.size() > 2, where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, where + "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    require(!key.empty(), where + "empty key");
    if (!section.empty()) {
      key = section + "." + key;
    }
    require(out.emplace(key, trim(line.substr(eq + 1))).second, where + "duplicate key '" + key + "'");
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& item : split_list(text)) {
    seeds.push_back(to_u64("seeds", item));
  }
  require(!seeds.empty(), "seed list is empty");
  return seeds;
}

RunSpec run_spec_from_text(const std::string& text) {
  RunSpec spec;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"data.source",
       [&](auto& k, auto& v) {
         if (v == "sbm") {
           spec.source = DataSource::sbm;
         } else if (v == "corpus") {
           spec.source = DataSource::corpus;
         } else {
           fail("config: " + k + " must be sbm or corpus");
         }
       }},
      {"data.dir", [&](auto&, auto& v) { spec.corpus_dir = v; }},
      {"data.train_count", [&](auto& k, auto& v) { spec.train_count = to_u64(k, v); }},
      {"data.val_count", [&](auto& k, auto& v) { spec.val_count = to_u64(k, v); }},
      {"data.test_count", [&](auto& k, auto& v) { spec.test_count = to_u64(k, v); }},
      {"data.seed", [&](auto& k, auto& v) { spec.data_seed = to_u64(k, v); }},
      {"sbm.n_min", [&](auto& k, auto& v) { spec.sbm.n_min = to_u64(k, v); }},
      {"sbm.n_max", [&](auto& k, auto& v) { spec.sbm.n_max = to_u64(k, v); }},
      {"sbm.communities", [&](auto& k, auto& v) { spec.sbm.communities = static_cast<int>(to_u64(k, v)); }},
      {"sbm.p_intra", [&](auto& k, auto& v) { spec.sbm.p_intra = to_double(k, v); }},
      {"sbm.p_inter", [&](auto& k, auto& v) { spec.sbm.p_inter = to_double(k, v); }},
      {"sbm.task", [&](auto&, auto& v) { spec.sbm.task = parse_sbm_task(v); }},
      {"sbm.hint_fraction", [&](auto& k, auto& v) { spec.sbm.hint_fraction = to_double(k, v); }},
      {"model.layers", [&](auto& k, auto& v) { spec.model.layers = to_u64(k, v); }},
      {"model.node_width", [&](auto& k, auto& v) { spec.model.node_width = to_u64(k, v); }},
      {"model.edge_width", [&](auto& k, auto& v) { spec.model.edge_width = to_u64(k, v); }},
      {"model.heads", [&](auto& k, auto& v) { spec.model.heads = to_u64(k, v); }},
      {"model.key_width", [&](auto& k, auto& v) { spec.model.key_width = to_u64(k, v); }},
      {"model.clip_lo", [&](auto& k, auto& v) { spec.model.clip_lo = to_double(k, v); }},
      {"model.clip_hi", [&](auto& k, auto& v) { spec.model.clip_hi = to_double(k, v); }},
      {"model.gated", [&](auto& k, auto& v) { spec.model.gated = to_bool(k, v); }},
      {"model.variant", [&](auto&, auto& v) { spec.model.variant = parse_variant(v); }},
      {"model.pe", [&](auto&, auto& v) { spec.model.pe.kind = parse_pe(v); }},
      {"model.pe_rank", [&](auto& k, auto& v) { spec.model.pe.rank = to_u64(k, v); }},
      {"model.pe_augment", [&](auto& k, auto& v) { spec.model.pe.augment = to_bool(k, v); }},
      {"model.ffn_mult_node", [&](auto& k, auto& v) { spec.model.ffn_mult_node = to_double(k, v); }},
      {"model.ffn_mult_edge", [&](auto& k, auto& v) { spec.model.ffn_mult_edge = to_double(k, v); }},
      {"model.ln_eps", [&](auto& k, auto& v) { spec.model.ln_eps = to_double(k, v); }},
      {"train.lr", [&](auto& k, auto& v) { spec.train.lr_init = to_double(k, v); }},
      {"train.batch_size", [&](auto& k, auto& v) { spec.train.batch_size = to_u64(k, v); }},
      {"train.max_epochs", [&](auto& k, auto& v) { spec.train.max_epochs = to_u64(k, v); }},
      {"train.patience", [&](auto& k, auto& v) { spec.train.plateau_patience = to_u64(k, v); }},
      {"train.factor", [&](auto& k, auto& v) { spec.train.plateau_factor = to_double(k, v); }},
      {"train.min_lr", [&](auto& k, auto& v) { spec.train.min_lr = to_double(k, v); }},
      {"train.eval_every", [&](auto& k, auto& v) { spec.train.eval_every = to_u64(k, v); }},
      {"run.out", [&](auto&, auto& v) { spec.out_dir = v; }},
      {"run.seeds", [&](auto&, auto& v) { spec.seeds = parse_seed_list(v); }},
      {"ablate.variants",
       [&](auto&, auto& v) {
         spec.ablate_variants.clear();
         for (const auto& item : split_list(v)) {
           spec.ablate_variants.push_back(parse_variant(item));
         }
       }},
      {"ablate.pe",
       [&](auto&, auto& v) {
         spec.ablate_pe.clear();
         for (const auto& item : split_list(v)) {
           spec.ablate_pe.push_back(parse_pe(item));
         }
       }},
  };
  for (const auto& [key, value] : parse_key_values(text)) {
    auto it = setters.find(key);
    require(it != setters.end(), "config: unknown key '" + key + "'");
    it->second(key, value);
  }
  validate(spec);
  return spec;
}

RunSpec load_run_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return run_spec_from_text(buffer.str());
}

void validate(const RunSpec& spec) {
  if (spec.source == DataSource::sbm) {
    validate(spec.sbm);
    require(spec.train_count >= 1 && spec.val_count >= 1, "config: train and val counts must be positive");
  } else {
    require(!spec.corpus_dir.empty(), "config: data.dir is required for corpus input");
  }
  ModelConfig probe = spec.model;
  validate(probe);
  validate(spec.train);
  require(!spec.seeds.empty(), "config: run.seeds is empty");
  require(!spec.ablate_variants.empty() && !spec.ablate_pe.empty(), "config: ablation lists must be non-empty");
}

nlohmann::json to_json(const RunSpec& spec) {
  nlohmann::json j;
  j["data"] = {{"source", spec.source == DataSource::sbm ? "sbm" : "corpus"},
               {"dir", spec.corpus_dir.string()},
               {"train_count", spec.train_count},
               {"val_count", spec.val_count},
               {"test_count", spec.test_count},
               {"seed", spec.data_seed}};
  j["sbm"] = {{"n_min", spec.sbm.n_min},        {"n_max", spec.sbm.n_max},
              {"communities", spec.sbm.communities}, {"p_intra", spec.sbm.p_intra},
              {"p_inter", spec.sbm.p_inter},    {"task", to_string(spec.sbm.task)},
              {"hint_fraction", spec.sbm.hint_fraction}};
  j["model"] = to_json(spec.model);
  j["train"] = {{"lr", spec.train.lr_init},          {"batch_size", spec.train.batch_size},
                {"max_epochs", spec.train.max_epochs}, {"patience", spec.train.plateau_patience},
                {"factor", spec.train.plateau_factor}, {"min_lr", spec.train.min_lr},
                {"eval_every", spec.train.eval_every}};
  j["run"] = {{"out", spec.out_dir.string()}, {"seeds", spec.seeds}};
  return j;
}

}  // namespace egt
