#include "egt/model.hpp"

#include <cmath>

#include "egt/error.hpp"
#include "egt/ops.hpp"

namespace egt {

ParameterBinding::ParameterBinding(Tape& tape, const ParameterStore& params, bool requires_grad) : params_(&params) {
  vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    vars_.push_back(requires_grad ? tape.parameter(params.at(i)) : tape.constant(params.at(i)));
  }
}

Var ParameterBinding::operator[](const std::string& name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (params_->name(i) == name) {
      return vars_[i];
    }
  }
  fail("model: missing parameter '" + name + "'");
}

std::vector<Tensor> ParameterBinding::gradients(const Tape& tape) const {
  std::vector<Tensor> grads;
  grads.reserve(vars_.size());
  for (Var v : vars_) {
    grads.push_back(tape.grad(v));
  }
  return grads;
}

Tensor augment_encodings(const Tensor& pe, const PeConfig& pe_cfg, Rng& rng) {
  Tensor out = pe;
  if (pe_cfg.kind == PeKind::none) {
    return out;
  }
  const std::size_t b = pe.dim(0);
  const std::size_t n = pe.dim(1);
  const std::size_t width = pe.dim(2);
  const std::size_t pairs = pe_cfg.kind == PeKind::svd ? width / 2 : width;
  for (std::size_t g = 0; g < b; ++g) {
    for (std::size_t k = 0; k < pairs; ++k) {
      if (!rng.bernoulli(0.5)) {
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) {
        double* row = out.data().data() + (g * n + i) * width;
        row[k] = -row[k];
        if (pe_cfg.kind == PeKind::svd) {
          row[pairs + k] = -row[pairs + k];
        }
      }
    }
  }
  return out;
}

namespace {

Mask complement_within(const Mask& inner, const Mask& outer) {
  Mask out(outer.shape());
  for (std::size_t i = 0; i < outer.size(); ++i) {
    out.set(i, outer[i] && !inner[i]);
  }
  return out;
}

Var norm(Tape& tape, const ParameterBinding& p, const std::string& prefix, Var x, double eps) {
  return ops::layer_norm(tape, x, p[prefix + ".gain"], p[prefix + ".bias"], eps);
}

Var ffn(Tape& tape, const ParameterBinding& p, const std::string& prefix, Var x) {
  Var hidden = ops::elu(tape, ops::linear(tape, x, p[prefix + ".w1"], p[prefix + ".b1"]));
  return ops::linear(tape, hidden, p[prefix + ".w2"], p[prefix + ".b2"]);
}

// Embeds per-pair edge features: the feature embedding where an edge exists,
// the mask token (or mask value) elsewhere. Result is [b, n, n, width].
Var edge_feature_embedding(Tape& tape, const ParameterBinding& p, const std::string& prefix, const InputSpec& in,
                           const GraphBatch& batch) {
  const std::size_t b = batch.size;
  const std::size_t m = batch.max_n;
  require(batch.edge_kind == in.kind, "model: batch edge features are " + std::string(to_string(batch.edge_kind)) +
                                          ", configuration expects " + std::string(to_string(in.kind)));
  if (in.kind == FeatureKind::discrete) {
    std::vector<int> ids(b * m * m);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const int id = batch.edge_ids[i];
      if (batch.edge_feature_mask[i]) {
        require(id >= 0 && static_cast<std::size_t>(id) < in.size,
                "model: edge feature id " + std::to_string(id) + " outside vocabulary of " + std::to_string(in.size));
      }
      ids[i] = batch.edge_feature_mask[i] ? id : static_cast<int>(in.size);
    }
    return ops::embedding(tape, p[prefix], ids, {b, m, m});
  }
  require(batch.edge_dim == in.size, "model: edge feature width mismatch");
  Var values = tape.constant(batch.edge_values);
  Var present = ops::apply_mask(tape, ops::linear(tape, values, p[prefix + ".weight"], p[prefix + ".bias"]),
                                batch.edge_feature_mask);
  Var absent = ops::masked_broadcast(tape, p[prefix + ".mask"],
                                     complement_within(batch.edge_feature_mask, Mask({b, m, m}, true)));
  return ops::add(tape, present, absent);
}

Var node_embedding(Tape& tape, const ParameterBinding& p, const ModelConfig& cfg, const GraphBatch& batch) {
  const std::size_t b = batch.size;
  const std::size_t m = batch.max_n;
  const InputSpec& in = cfg.node_input;
  Var h;
  if (in.kind == FeatureKind::none) {
    const std::vector<int> ids(b * m, 0);
    h = ops::embedding(tape, p["embed.node"], ids, {b, m});
  } else {
    require(batch.node_kind == in.kind, "model: batch node features are " + std::string(to_string(batch.node_kind)) +
                                            ", configuration expects " + std::string(to_string(in.kind)));
    if (in.kind == FeatureKind::discrete) {
      h = ops::embedding(tape, p["embed.node"], batch.node_ids, {b, m});
    } else {
      require(batch.node_dim == in.size, "model: node feature width mismatch");
      h = ops::linear(tape, tape.constant(batch.node_values), p["embed.node.weight"], p["embed.node.bias"]);
    }
  }
  return h;
}

Var mlp_head(Tape& tape, const ParameterBinding& p, Var x) {
  Var y = ops::elu(tape, ops::linear(tape, x, p["head.w1"], p["head.b1"]));
  y = ops::elu(tape, ops::linear(tape, y, p["head.w2"], p["head.b2"]));
  return ops::linear(tape, y, p["head.w3"], p["head.b3"]);
}

}  // namespace

DualState embed_inputs(Tape& tape, const ParameterBinding& p, const ModelConfig& cfg, const GraphBatch& batch,
                       const ForwardOptions& options) {
  const std::size_t b = batch.size;
  const std::size_t m = batch.max_n;
  const Mask& attention_scope = cfg.variant == Variant::egt_constrained ? batch.structure_mask : batch.pair_mask;
  Var h = node_embedding(tape, p, cfg, batch);
  if (cfg.pe.kind != PeKind::none) {
    require(batch.pe.shape() == Shape({b, m, cfg.pe.width()}),
            "model: positional encodings have shape " + shape_to_string(batch.pe.shape()) + ", expected " +
                shape_to_string({b, m, cfg.pe.width()}));
    Tensor pe = batch.pe;
    if (options.train && cfg.pe.augment) {
      require(options.rng != nullptr, "model: augmentation needs a random source");
      pe = augment_encodings(pe, cfg.pe, *options.rng);
    }
    h = ops::add(tape, h, ops::linear(tape, tape.constant(std::move(pe)), p["embed.pe"]));
  }
  h = ops::apply_mask(tape, h, batch.node_mask);

  Var e;
  if (cfg.uses_edge_embeddings()) {
    e = ops::embedding(tape, p["embed.adjacency"], batch.structure_ids, {b, m, m});
    if (cfg.edge_input.kind != FeatureKind::none) {
      e = ops::add(tape, e, edge_feature_embedding(tape, p, "embed.edge", cfg.edge_input, batch));
    }
    e = ops::apply_mask(tape, e, attention_scope);
  }
  return {h, e};
}

Var ffn_sublayer(Tape& tape, const ParameterBinding& p, const ModelConfig& cfg, std::size_t layer, char channel,
                 Var x) {
  require(channel == 'h' || channel == 'e', "ffn_sublayer: channel must be 'h' or 'e'");
  const std::string pre = "layer" + std::to_string(layer) + ".";
  const std::string c(1, channel);
  return ops::add(tape, x, ffn(tape, p, pre + "ffn_" + c, norm(tape, p, pre + "ln_ffn_" + c, x, cfg.ln_eps)));
}

Var head_output(Tape& tape, const ParameterBinding& p, const ModelConfig& cfg, Var h, Var e, const GraphBatch& batch) {
  switch (cfg.head) {
    case HeadKind::node:
      return mlp_head(tape, p, h);
    case HeadKind::graph:
      return mlp_head(tape, p, ops::masked_mean(tape, h, batch.node_mask));
    case HeadKind::edge:
      if (cfg.has_edge_channel()) {
        require(e.valid(), "edge head: missing edge embeddings");
        return mlp_head(tape, p, e);
      } else {
        std::optional<Var> extra;
        if (cfg.edge_input.kind != FeatureKind::none) {
          extra = ops::apply_mask(tape, edge_feature_embedding(tape, p, "head.edge_embed", cfg.edge_input, batch),
                                  batch.pair_mask);
        }
        return mlp_head(tape, p, ops::pair_concat(tape, h, extra));
      }
  }
  fail("unknown head");
}

ForwardResult forward(Tape& tape, const ParameterBinding& p, const ModelConfig& cfg, const GraphBatch& batch,
                      const ForwardOptions& options) {
  validate(cfg);
  const std::size_t heads = cfg.heads;
  const bool constrained = cfg.variant == Variant::egt_constrained;
  const Mask& attention_scope = constrained ? batch.structure_mask : batch.pair_mask;
  const Mask head_scope = ops::expand_heads(attention_scope, heads);
  const double eps = cfg.ln_eps;

  const DualState input = embed_inputs(tape, p, cfg, batch, options);
  Var h = input.h;
  Var e = input.e;
  const Var e0 = e;

  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    // Attention sublayer.
    Var hh = norm(tape, p, pre + "ln_attn_h", h, eps);
    Var q = ops::linear(tape, hh, p[pre + "Q"]);
    Var k = ops::linear(tape, hh, p[pre + "K"]);
    Var v = ops::linear(tape, hh, p[pre + "V"]);
    Var scores = ops::head_scores(tape, q, k, heads, 1.0 / std::sqrt(static_cast<double>(cfg.head_width())));
    Var clipped = ops::clip(tape, scores, cfg.clip_lo, cfg.clip_hi);
    Var logits = clipped;
    Var gates;
    if (cfg.uses_edge_embeddings()) {
      Var ee = cfg.has_edge_channel() ? norm(tape, p, pre + "ln_attn_e", e, eps) : e0;
      Var bias = ops::permute(tape, ops::linear(tape, ee, p[pre + "E"]), {0, 3, 1, 2});
      logits = ops::add(tape, clipped, bias);
      if (cfg.uses_gates()) {
        gates = ops::sigmoid(tape, ops::permute(tape, ops::linear(tape, ee, p[pre + "G"]), {0, 3, 1, 2}));
      }
    }
    Var soft = ops::masked_softmax(tape, logits, head_scope, true);
    Var weights = gates.valid() ? ops::mul(tape, soft, gates) : soft;
    Var aggregated = ops::attend(tape, weights, v, heads);
    h = ops::add(tape, h, ops::linear(tape, aggregated, p[pre + "O_h"]));
    if (cfg.has_edge_channel()) {
      Var update = ops::linear(tape, ops::permute(tape, logits, {0, 2, 3, 1}), p[pre + "O_e"]);
      e = ops::apply_mask(tape, ops::add(tape, e, update), attention_scope);
    }
    if (options.probe != nullptr) {
      options.probe->push_back({tape.value(clipped), tape.value(logits), tape.value(soft),
                                gates.valid() ? tape.value(gates) : Tensor(), tape.value(weights), head_scope});
    }

    // Feed-forward sublayers.
    h = ops::apply_mask(tape, ffn_sublayer(tape, p, cfg, l, 'h', h), batch.node_mask);
    if (cfg.has_edge_channel()) {
      e = ops::apply_mask(tape, ffn_sublayer(tape, p, cfg, l, 'e', e), attention_scope);
    }
  }

  ForwardResult result;
  result.h = ops::apply_mask(tape, norm(tape, p, "final_ln_h", h, eps), batch.node_mask);
  if (cfg.has_edge_channel()) {
    result.e = ops::apply_mask(tape, norm(tape, p, "final_ln_e", e, eps), attention_scope);
  }

  result.output = head_output(tape, p, cfg, result.h, result.e, batch);
  return result;
}

Var task_loss(Tape& tape, const ModelConfig& cfg, Var output, const GraphBatch& batch,
              std::span<const double> class_weights) {
  if (cfg.regression) {
    return ops::mean_absolute_error(tape, output, batch.values, batch.target_mask);
  }
  return ops::weighted_cross_entropy(tape, output, batch.labels, batch.target_mask, class_weights);
}

}  // namespace egt
