#include "egt/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "egt/error.hpp"
#include "egt/rng.hpp"

namespace egt {

namespace {

constexpr char kMagic[8] = {'E', 'G', 'T', 'P', 'A', 'R', 'M', '1'};

void add_input(std::vector<ParamSpec>& specs, const std::string& prefix, const InputSpec& in, std::size_t width,
               bool mask_token) {
  switch (in.kind) {
    case FeatureKind::none:
      break;
    case FeatureKind::discrete:
      specs.push_back({prefix, {in.size + (mask_token ? 1 : 0), width}, InitRule::embedding});
      break;
    case FeatureKind::continuous:
      specs.push_back({prefix + ".weight", {width, in.size}, InitRule::glorot});
      specs.push_back({prefix + ".bias", {width}, InitRule::zeros});
      if (mask_token) {
        specs.push_back({prefix + ".mask", {1, width}, InitRule::embedding});
      }
      break;
  }
}

void add_norm(std::vector<ParamSpec>& specs, const std::string& prefix, std::size_t width) {
  specs.push_back({prefix + ".gain", {width}, InitRule::ones});
  specs.push_back({prefix + ".bias", {width}, InitRule::zeros});
}

void add_ffn(std::vector<ParamSpec>& specs, const std::string& prefix, std::size_t width, std::size_t hidden) {
  specs.push_back({prefix + ".w1", {hidden, width}, InitRule::glorot});
  specs.push_back({prefix + ".b1", {hidden}, InitRule::zeros});
  specs.push_back({prefix + ".w2", {width, hidden}, InitRule::glorot});
  specs.push_back({prefix + ".b2", {width}, InitRule::zeros});
}

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& in, const std::filesystem::path& path) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  require(static_cast<bool>(in), "checkpoint " + path.string() + ": truncated file");
  return v;
}

}  // namespace

std::vector<ParamSpec> parameter_specs(const ModelConfig& cfg) {
  validate(cfg);
  const std::size_t dh = cfg.node_width;
  const std::size_t de = cfg.edge_width;
  const std::size_t hk = cfg.heads * cfg.head_width();
  std::vector<ParamSpec> specs;

  if (cfg.node_input.kind == FeatureKind::none) {
    specs.push_back({"embed.node", {1, dh}, InitRule::embedding});
  } else {
    add_input(specs, "embed.node", cfg.node_input, dh, false);
  }
  if (cfg.pe.kind != PeKind::none) {
    specs.push_back({"embed.pe", {dh, cfg.pe.width()}, InitRule::glorot});
  }
  if (cfg.uses_edge_embeddings()) {
    specs.push_back({"embed.adjacency", {2, de}, InitRule::embedding});
    add_input(specs, "embed.edge", cfg.edge_input, de, true);
  }

  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    add_norm(specs, p + "ln_attn_h", dh);
    if (cfg.has_edge_channel()) {
      add_norm(specs, p + "ln_attn_e", de);
    }
    specs.push_back({p + "Q", {hk, dh}, InitRule::glorot});
    specs.push_back({p + "K", {hk, dh}, InitRule::glorot});
    specs.push_back({p + "V", {hk, dh}, InitRule::glorot});
    specs.push_back({p + "O_h", {dh, hk}, InitRule::glorot});
    if (cfg.uses_edge_embeddings()) {
      specs.push_back({p + "E", {cfg.heads, de}, InitRule::glorot});
    }
    if (cfg.uses_gates()) {
      specs.push_back({p + "G", {cfg.heads, de}, InitRule::glorot});
    }
    if (cfg.has_edge_channel()) {
      specs.push_back({p + "O_e", {de, cfg.heads}, InitRule::glorot});
    }
    add_norm(specs, p + "ln_ffn_h", dh);
    add_ffn(specs, p + "ffn_h", dh, cfg.ffn_width_node());
    if (cfg.has_edge_channel()) {
      add_norm(specs, p + "ln_ffn_e", de);
      add_ffn(specs, p + "ffn_e", de, cfg.ffn_width_edge());
    }
  }
  add_norm(specs, "final_ln_h", dh);
  if (cfg.has_edge_channel()) {
    add_norm(specs, "final_ln_e", de);
  }

  std::size_t in = dh;
  std::size_t h1 = std::max<std::size_t>(1, dh / 2);
  std::size_t h2 = std::max<std::size_t>(1, dh / 4);
  if (cfg.head == HeadKind::edge && cfg.has_edge_channel()) {
    in = de;
    h1 = std::max<std::size_t>(1, de / 2);
    h2 = std::max<std::size_t>(1, de / 4);
  } else if (cfg.edge_head_fallback()) {
    in = 2 * dh + (cfg.edge_input.kind != FeatureKind::none ? dh : 0);
    add_input(specs, "head.edge_embed", cfg.edge_input, dh, true);
  }
  specs.push_back({"head.w1", {h1, in}, InitRule::glorot});
  specs.push_back({"head.b1", {h1}, InitRule::zeros});
  specs.push_back({"head.w2", {h2, h1}, InitRule::glorot});
  specs.push_back({"head.b2", {h2}, InitRule::zeros});
  specs.push_back({"head.w3", {cfg.outputs, h2}, InitRule::glorot});
  specs.push_back({"head.b3", {cfg.outputs}, InitRule::zeros});
  return specs;
}

void ParameterStore::add(std::string name, Tensor value) {
  require(!contains(name), "parameter '" + name + "' added twice");
  index_.emplace(name, values_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
}

Tensor& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  require(it != index_.end(), "unknown parameter '" + name + "'");
  return values_[it->second];
}

const Tensor& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  require(it != index_.end(), "unknown parameter '" + name + "'");
  return values_[it->second];
}

std::size_t ParameterStore::scalar_count() const noexcept {
  std::size_t total = 0;
  for (const Tensor& t : values_) {
    total += t.size();
  }
  return total;
}

ParameterStore init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  ParameterStore store;
  Rng rng(seed);
  for (const ParamSpec& spec : parameter_specs(cfg)) {
    Tensor t(spec.shape);
    switch (spec.init) {
      case InitRule::zeros:
        break;
      case InitRule::ones:
        t.fill(1.0);
        break;
      case InitRule::glorot: {
        const double limit = std::sqrt(6.0 / static_cast<double>(spec.shape[0] + spec.shape[1]));
        for (double& v : t.data()) {
          v = rng.uniform(-limit, limit);
        }
        break;
      }
      case InitRule::embedding: {
        const double s = 1.0 / std::sqrt(static_cast<double>(spec.shape[1]));
        for (double& v : t.data()) {
          v = rng.normal() * s;
        }
        break;
      }
    }
    store.add(spec.name, std::move(t));
  }
  return store;
}

void check_parameters(const ModelConfig& cfg, const ParameterStore& params) {
  const auto specs = parameter_specs(cfg);
  require(specs.size() == params.size(), "parameter store holds " + std::to_string(params.size()) +
                                             " tensors, configuration expects " + std::to_string(specs.size()));
  for (std::size_t i = 0; i < specs.size(); ++i) {
    require(params.name(i) == specs[i].name,
            "parameter " + std::to_string(i) + " is '" + params.name(i) + "', expected '" + specs[i].name + "'");
    require(params.at(i).shape() == specs[i].shape, "parameter '" + specs[i].name + "' has shape " +
                                                        shape_to_string(params.at(i).shape()) + ", expected " +
                                                        shape_to_string(specs[i].shape));
    check_finite(params.at(i), specs[i].name);
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  check_parameters(checkpoint.config, checkpoint.params);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  const std::string header =
      nlohmann::json{{"config", to_json(checkpoint.config)}, {"metadata", checkpoint.metadata}}.dump();
  write_u64(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_u64(out, checkpoint.params.size());
  for (std::size_t i = 0; i < checkpoint.params.size(); ++i) {
    const std::string& name = checkpoint.params.name(i);
    const Tensor& t = checkpoint.params.at(i);
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, t.rank());
    for (std::size_t d : t.shape()) {
      write_u64(out, d);
    }
    out.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  require(static_cast<bool>(out), "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open checkpoint " + path.string());
  char magic[sizeof kMagic] = {};
  in.read(magic, sizeof magic);
  require(static_cast<bool>(in) && std::memcmp(magic, kMagic, sizeof kMagic) == 0,
          "checkpoint " + path.string() + ": not a parameter container");
  const std::uint64_t header_size = read_u64(in, path);
  require(header_size < (1u << 24), "checkpoint " + path.string() + ": implausible header size");
  std::string header(header_size, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_size));
  require(static_cast<bool>(in), "checkpoint " + path.string() + ": truncated header");

  Checkpoint checkpoint;
  try {
    const auto j = nlohmann::json::parse(header);
    checkpoint.config = model_config_from_json(j.at("config"));
    checkpoint.metadata = j.at("metadata");
  } catch (const nlohmann::json::exception& e) {
    fail("checkpoint " + path.string() + ": bad header: " + e.what());
  }
  const std::uint64_t count = read_u64(in, path);
  require(count < (1u << 20), "checkpoint " + path.string() + ": implausible tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t name_size = read_u64(in, path);
    require(name_size < 4096, "checkpoint " + path.string() + ": implausible name length");
    std::string name(name_size, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_size));
    const std::uint64_t rank = read_u64(in, path);
    require(rank <= 8, "checkpoint " + path.string() + ": implausible tensor rank");
    Shape shape(rank);
    for (auto& d : shape) {
      d = read_u64(in, path);
    }
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    require(static_cast<bool>(in), "checkpoint " + path.string() + ": truncated tensor '" + name + "'");
    checkpoint.params.add(std::move(name), std::move(t));
  }
  check_parameters(checkpoint.config, checkpoint.params);
  return checkpoint;
}

}  // namespace egt
