#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egt/batch.hpp"
#include "egt/model_config.hpp"
#include "egt/params.hpp"
#include "egt/rng.hpp"
#include "egt/tape.hpp"

namespace egt {

// Parameters placed on a tape, one variable per stored tensor.
class ParameterBinding {
 public:
  ParameterBinding(Tape& tape, const ParameterStore& params, bool requires_grad);
  Var operator[](const std::string& name) const;
  std::size_t size() const noexcept { return vars_.size(); }
  Var var(std::size_t i) const { return vars_.at(i); }
  // Gradients in store order after tape.backward().
  std::vector<Tensor> gradients(const Tape& tape) const;

 private:
  const ParameterStore* params_;
  std::vector<Var> vars_;
};

// Per-layer attention tensors, all [b, heads, n, n].
struct AttentionRecord {
  Tensor clipped;  // clip(scaled dot product)
  Tensor logits;   // clipped + E e_hat (what the softmax sees)
  Tensor softmax;
  Tensor gates;  // empty when ungated
  Tensor weights;
  Mask mask;  // entries the softmax ranges over
};

struct ForwardOptions {
  bool train = false;
  Rng* rng = nullptr;  // sign-flip augmentation source; required when augmenting in train mode
  std::vector<AttentionRecord>* probe = nullptr;
};

struct ForwardResult {
  Var h;        // [b, n, d_h] after the final layer norm, padded rows zero
  Var e;        // [b, n, n, d_e] or invalid when the variant has no edge channel
  Var output;   // head output: [b, n, C], [b, C] or [b, n, n, C]
};

struct DualState {
  Var h;  // [b, n, d_h]
  Var e;  // [b, n, n, d_e]; invalid for the plain transformer
};

// Node, positional and edge input embeddings with padded positions zeroed.
DualState embed_inputs(Tape& tape, const ParameterBinding& params, const ModelConfig& cfg, const GraphBatch& batch,
                       const ForwardOptions& options = {});

// x + W2 ELU(W1 LN(x) + b1) + b2 for layer `layer` and channel 'h' or 'e'.
Var ffn_sublayer(Tape& tape, const ParameterBinding& params, const ModelConfig& cfg, std::size_t layer, char channel,
                 Var x);

// Task head on final embeddings; `e` is only read by the edge-channel head.
Var head_output(Tape& tape, const ParameterBinding& params, const ModelConfig& cfg, Var h, Var e,
                const GraphBatch& batch);

ForwardResult forward(Tape& tape, const ParameterBinding& params, const ModelConfig& cfg, const GraphBatch& batch,
                      const ForwardOptions& options = {});

// Cross-entropy (class weighted) or MAE over the batch's target mask.
Var task_loss(Tape& tape, const ModelConfig& cfg, Var output, const GraphBatch& batch,
              std::span<const double> class_weights);

// Random sign flips of paired encoding columns, drawn per graph.
Tensor augment_encodings(const Tensor& pe, const PeConfig& pe_cfg, Rng& rng);

}  // namespace egt
