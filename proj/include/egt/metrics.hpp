#pragma once

#include <span>
#include <string>
#include <vector>

#include "egt/tensor.hpp"

namespace egt {

inline constexpr double kClassWeightCap = 100.0;

struct ClassWeights {
  std::vector<double> weights;
  std::vector<std::string> warnings;  // one per clamped class
};

// w_c = total / (C * count_c), clamped at `cap` (zero-count classes get `cap`).
ClassWeights class_weights(std::span<const std::size_t> counts, double cap = kClassWeightCap);

// Mean over classes present in the labels of per-class recall.
double balanced_accuracy(std::span<const int> preds, std::span<const int> labels, const Mask& mask,
                         std::size_t classes);
double accuracy(std::span<const int> preds, std::span<const int> labels, const Mask& mask);
// F1 on class 1; 0 when precision + recall is 0.
double f1_binary(std::span<const int> preds, std::span<const int> labels, const Mask& mask);
double mean_absolute(std::span<const double> preds, std::span<const double> targets, const Mask& mask);

// Row-wise argmax over the trailing axis (first maximum wins).
std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace egt
