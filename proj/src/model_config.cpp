#include "egt/model_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "egt/error.hpp"

namespace egt {

namespace {

std::string normalize(std::string_view text) {
  std::string out;
  for (char c : text) {
    out.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::egt:
      return "egt";
    case Variant::egt_simple:
      return "egt_simple";
    case Variant::transformer:
      return "transformer";
    case Variant::egt_constrained:
      return "egt_constrained";
  }
  return "egt";
}

std::string_view to_string(HeadKind h) {
  switch (h) {
    case HeadKind::node:
      return "node";
    case HeadKind::graph:
      return "graph";
    case HeadKind::edge:
      return "edge";
  }
  return "node";
}

std::string_view to_string(PeKind p) {
  switch (p) {
    case PeKind::none:
      return "none";
    case PeKind::svd:
      return "svd";
    case PeKind::laplacian:
      return "laplacian";
  }
  return "none";
}

Variant parse_variant(std::string_view text) {
  const std::string key = normalize(text);
  for (Variant v : {Variant::egt, Variant::egt_simple, Variant::transformer, Variant::egt_constrained}) {
    if (key == to_string(v)) {
      return v;
    }
  }
  fail("unknown variant '" + std::string(text) + "'");
}

HeadKind parse_head(std::string_view text) {
  const std::string key = normalize(text);
  for (HeadKind h : {HeadKind::node, HeadKind::graph, HeadKind::edge}) {
    if (key == to_string(h)) {
      return h;
    }
  }
  fail("unknown head '" + std::string(text) + "'");
}

PeKind parse_pe(std::string_view text) {
  const std::string key = normalize(text);
  for (PeKind p : {PeKind::none, PeKind::svd, PeKind::laplacian}) {
    if (key == to_string(p)) {
      return p;
    }
  }
  fail("unknown positional encoding '" + std::string(text) + "'");
}

std::size_t ModelConfig::ffn_width_node() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(ffn_mult_node * static_cast<double>(node_width))));
}

std::size_t ModelConfig::ffn_width_edge() const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(ffn_mult_edge * static_cast<double>(edge_width))));
}

void validate(const ModelConfig& cfg) {
  require(cfg.layers >= 1, "model: need at least one layer");
  require(cfg.heads >= 1, "model: need at least one head");
  require(cfg.node_width >= 1, "model: node width must be positive");
  require(cfg.head_width() >= 1, "model: per-head key width resolves to zero (node_width < heads?)");
  require(!cfg.uses_edge_embeddings() || cfg.edge_width >= 1, "model: edge width must be positive for edge variants");
  require(cfg.clip_lo < cfg.clip_hi, "model: clip range must satisfy lo < hi");
  require(cfg.outputs >= 1, "model: need at least one output");
  require(!cfg.regression || cfg.head == HeadKind::graph, "model: regression is only supported with the graph head");
  require(cfg.ln_eps > 0.0, "model: layer-norm eps must be positive");
  require(cfg.ffn_mult_node > 0.0 && cfg.ffn_mult_edge > 0.0, "model: FFN multipliers must be positive");
  require(cfg.pe.kind == PeKind::none || cfg.pe.rank >= 1, "model: positional encoding rank must be positive");
  require(cfg.node_input.kind == FeatureKind::none || cfg.node_input.size >= 1, "model: node input size missing");
  require(cfg.edge_input.kind == FeatureKind::none || cfg.edge_input.size >= 1, "model: edge input size missing");
}

std::string display_name(const ModelConfig& cfg) {
  std::string name;
  switch (cfg.variant) {
    case Variant::egt:
      name = "EGT";
      break;
    case Variant::egt_simple:
      name = "EGT-Simple";
      break;
    case Variant::transformer:
      name = "Transformer";
      break;
    case Variant::egt_constrained:
      name = "EGT-Constrained";
      break;
  }
  if (cfg.uses_edge_embeddings()) {
    name += cfg.gated ? "-G" : "-U";
  }
  if (cfg.pe.kind == PeKind::svd) {
    name += "-SPE";
  } else if (cfg.pe.kind == PeKind::laplacian) {
    name += "-LPE";
  }
  if (cfg.pe.kind != PeKind::none && cfg.pe.augment) {
    name += "-A";
  }
  return name;
}

std::size_t analytic_parameter_count(const ModelConfig& cfg) {
  const std::size_t dh = cfg.node_width;
  const std::size_t de = cfg.edge_width;
  const std::size_t heads = cfg.heads;
  const std::size_t dk = cfg.head_width();
  const std::size_t fh = cfg.ffn_width_node();
  const std::size_t fe = cfg.ffn_width_edge();
  auto input_count = [](const InputSpec& in, std::size_t width, bool mask_token) -> std::size_t {
    switch (in.kind) {
      case FeatureKind::none:
        return 0;
      case FeatureKind::discrete:
        return (in.size + (mask_token ? 1 : 0)) * width;
      case FeatureKind::continuous:
        return in.size * width + width + (mask_token ? width : 0);
    }
    return 0;
  };
  auto mlp = [](std::size_t in, std::size_t h1, std::size_t h2, std::size_t out) {
    return in * h1 + h1 + h1 * h2 + h2 + h2 * out + out;
  };

  std::size_t total = cfg.node_input.kind == FeatureKind::none ? dh : input_count(cfg.node_input, dh, false);
  total += cfg.pe.width() * dh;
  if (cfg.uses_edge_embeddings()) {
    total += 2 * de + input_count(cfg.edge_input, de, true);
  }
  std::size_t per_layer = 2 * dh + 3 * heads * dk * dh + dh * heads * dk + 2 * dh + 2 * fh * dh + fh + dh;
  if (cfg.uses_edge_embeddings()) {
    per_layer += heads * de * (cfg.gated ? 2 : 1);
  }
  if (cfg.has_edge_channel()) {
    per_layer += 2 * de + de * heads + 2 * de + 2 * fe * de + fe + de;
  }
  total += cfg.layers * per_layer;
  total += 2 * dh + (cfg.has_edge_channel() ? 2 * de : 0);

  const std::size_t node_h1 = std::max<std::size_t>(1, dh / 2);
  const std::size_t node_h2 = std::max<std::size_t>(1, dh / 4);
  if (cfg.head == HeadKind::edge && cfg.has_edge_channel()) {
    total += mlp(de, std::max<std::size_t>(1, de / 2), std::max<std::size_t>(1, de / 4), cfg.outputs);
  } else if (cfg.head == HeadKind::edge) {
    const bool features = cfg.edge_input.kind != FeatureKind::none;
    total += mlp(2 * dh + (features ? dh : 0), node_h1, node_h2, cfg.outputs);
    total += input_count(cfg.edge_input, dh, true);
  } else {
    total += mlp(dh, node_h1, node_h2, cfg.outputs);
  }
  return total;
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return nlohmann::json{{"layers", cfg.layers},
                        {"node_width", cfg.node_width},
                        {"edge_width", cfg.edge_width},
                        {"heads", cfg.heads},
                        {"key_width", cfg.key_width},
                        {"clip_lo", cfg.clip_lo},
                        {"clip_hi", cfg.clip_hi},
                        {"gated", cfg.gated},
                        {"variant", to_string(cfg.variant)},
                        {"pe", to_string(cfg.pe.kind)},
                        {"pe_rank", cfg.pe.rank},
                        {"pe_augment", cfg.pe.augment},
                        {"head", to_string(cfg.head)},
                        {"outputs", cfg.outputs},
                        {"regression", cfg.regression},
                        {"ffn_mult_node", cfg.ffn_mult_node},
                        {"ffn_mult_edge", cfg.ffn_mult_edge},
                        {"ln_eps", cfg.ln_eps},
                        {"node_input_kind", to_string(cfg.node_input.kind)},
                        {"node_input_size", cfg.node_input.size},
                        {"edge_input_kind", to_string(cfg.edge_input.kind)},
                        {"edge_input_size", cfg.edge_input.size}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.layers = j.at("layers").get<std::size_t>();
  cfg.node_width = j.at("node_width").get<std::size_t>();
  cfg.edge_width = j.at("edge_width").get<std::size_t>();
  cfg.heads = j.at("heads").get<std::size_t>();
  cfg.key_width = j.at("key_width").get<std::size_t>();
  cfg.clip_lo = j.at("clip_lo").get<double>();
  cfg.clip_hi = j.at("clip_hi").get<double>();
  cfg.gated = j.at("gated").get<bool>();
  cfg.variant = parse_variant(j.at("variant").get<std::string>());
  cfg.pe.kind = parse_pe(j.at("pe").get<std::string>());
  cfg.pe.rank = j.at("pe_rank").get<std::size_t>();
  cfg.pe.augment = j.at("pe_augment").get<bool>();
  cfg.head = parse_head(j.at("head").get<std::string>());
  cfg.outputs = j.at("outputs").get<std::size_t>();
  cfg.regression = j.at("regression").get<bool>();
  cfg.ffn_mult_node = j.at("ffn_mult_node").get<double>();
  cfg.ffn_mult_edge = j.at("ffn_mult_edge").get<double>();
  cfg.ln_eps = j.at("ln_eps").get<double>();
  cfg.node_input = {parse_feature_kind(j.at("node_input_kind").get<std::string>()), j.at("node_input_size").get<std::size_t>()};
  cfg.edge_input = {parse_feature_kind(j.at("edge_input_kind").get<std::string>()), j.at("edge_input_size").get<std::size_t>()};
  validate(cfg);
  return cfg;
}

}  // namespace egt
