#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "egt/graph.hpp"
#include "json.hpp"

namespace egt {

enum class Variant { egt, egt_simple, transformer, egt_constrained };
enum class HeadKind { node, graph, edge };
enum class PeKind { none, svd, laplacian };

std::string_view to_string(Variant v);
std::string_view to_string(HeadKind h);
std::string_view to_string(PeKind p);
// Accepts "egt", "EGT", "egt-simple", "EGT_SIMPLE", ...
Variant parse_variant(std::string_view text);
HeadKind parse_head(std::string_view text);
PeKind parse_pe(std::string_view text);

struct PeConfig {
  PeKind kind = PeKind::none;
  std::size_t rank = 8;
  bool augment = false;

  // Width of the per-node encoding vector fed to the learned projection.
  std::size_t width() const noexcept {
    return kind == PeKind::svd ? 2 * rank : kind == PeKind::laplacian ? rank : 0;
  }

  bool operator==(const PeConfig& other) const = default;
};

// Vocabulary size for discrete inputs, vector width for continuous ones.
struct InputSpec {
  FeatureKind kind = FeatureKind::none;
  std::size_t size = 0;

  bool operator==(const InputSpec& other) const = default;
};

struct ModelConfig {
  std::size_t layers = 4;
  std::size_t node_width = 64;  // d_h
  std::size_t edge_width = 8;   // d_e
  std::size_t heads = 8;
  std::size_t key_width = 0;  // d_k; 0 means node_width / heads
  double clip_lo = -5.0;
  double clip_hi = 5.0;
  bool gated = true;
  Variant variant = Variant::egt;
  PeConfig pe;
  HeadKind head = HeadKind::node;
  std::size_t outputs = 2;  // classes, or 1 for regression
  bool regression = false;
  double ffn_mult_node = 2.0;
  double ffn_mult_edge = 2.0;
  double ln_eps = 1e-5;
  InputSpec node_input;
  InputSpec edge_input;

  std::size_t head_width() const noexcept { return key_width != 0 ? key_width : node_width / heads; }
  bool has_edge_channel() const noexcept {
    return variant == Variant::egt || variant == Variant::egt_constrained;
  }
  bool uses_edge_embeddings() const noexcept { return variant != Variant::transformer; }
  bool uses_gates() const noexcept { return gated && uses_edge_embeddings(); }
  // Edge head built from pairwise node embeddings instead of the edge channel.
  bool edge_head_fallback() const noexcept { return head == HeadKind::edge && !has_edge_channel(); }
  std::size_t ffn_width_node() const;
  std::size_t ffn_width_edge() const;

  bool operator==(const ModelConfig& other) const = default;
};

void validate(const ModelConfig& cfg);

// "EGT-G-SPE", "Transformer-SPE-A", ...
std::string display_name(const ModelConfig& cfg);

// Closed-form parameter count from the configuration alone.
std::size_t analytic_parameter_count(const ModelConfig& cfg);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace egt
