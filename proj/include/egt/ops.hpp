#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "egt/tape.hpp"
#include "egt/tensor.hpp"

// Differentiable operations over Tape variables. Shapes follow the model's
// conventions: node tensors [b, n, d], pair tensors [b, n, n, d], attention
// tensors [b, heads, n, n]. Weight matrices are stored [out, in].
namespace egt::ops {

Var add(Tape& tape, Var a, Var b);
Var mul(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var a, double factor);
Var sum(Tape& tape, Var a);

// y = x W^T + bias over the trailing axis.
Var linear(Tape& tape, Var x, Var weight, std::optional<Var> bias = std::nullopt);

Var layer_norm(Tape& tape, Var x, Var gain, Var bias, double eps);

Var elu(Tape& tape, Var x);
Var sigmoid(Tape& tape, Var x);
// Gradient 1 strictly inside (lo, hi), 0 elsewhere including the boundary.
Var clip(Tape& tape, Var x, double lo, double hi);

// Softmax along the trailing axis restricted to mask entries; masked outputs
// are exactly 0. `mask` has the same shape as `x`. A row with no unmasked entry
// is an error unless allow_empty_rows, in which case it yields zeros.
Var masked_softmax(Tape& tape, Var x, const Mask& mask, bool allow_empty_rows = false);

// Zeroes every trailing-axis slice whose mask entry is false. The mask shape
// must equal the leading dimensions of x.
Var apply_mask(Tape& tape, Var x, const Mask& mask);

// Row lookup: result shape is ids_shape + [table.dim(1)].
Var embedding(Tape& tape, Var table, std::span<const int> ids, const Shape& ids_shape);

// Places `vec` at every position where mask is true, zeros elsewhere.
Var masked_broadcast(Tape& tape, Var vec, const Mask& mask);

Var permute(Tape& tape, Var x, const std::vector<std::size_t>& axes);

// q, k: [b, n, heads*width] -> [b, heads, n, n] scaled dot products per head.
Var head_scores(Tape& tape, Var q, Var k, std::size_t heads, double scale);
// w: [b, heads, n, n], v: [b, n, heads*width] -> [b, n, heads*width].
Var attend(Tape& tape, Var w, Var v, std::size_t heads);

// [b, n, d] -> [b, d], mean over rows where node_mask is true.
Var masked_mean(Tape& tape, Var h, const Mask& node_mask);

// [b, n, d] (+ optional [b, n, n, d2]) -> [b, n, n, 2d (+ d2)] with
// out[b,i,j] = h[b,i] || h[b,j] || extra[b,i,j].
Var pair_concat(Tape& tape, Var h, std::optional<Var> extra = std::nullopt);

// Mean over masked items of class_weights[y] * -log softmax(logits)_y.
// logits: [..., C]; labels and mask index the leading positions.
Var weighted_cross_entropy(Tape& tape, Var logits, std::span<const int> labels, const Mask& mask,
                           std::span<const double> class_weights);

// Mean |pred - target| over masked items; pred has one value per item.
Var mean_absolute_error(Tape& tape, Var pred, std::span<const double> target, const Mask& mask);

// Repeats a [b, n, n] mask over heads -> [b, heads, n, n].
Mask expand_heads(const Mask& pair_mask, std::size_t heads);

}  // namespace egt::ops
