#include "egt/metrics.hpp"

#include <cmath>

#include "egt/error.hpp"

namespace egt {

ClassWeights class_weights(std::span<const std::size_t> counts, double cap) {
  require(!counts.empty(), "class weights: no classes");
  require(cap > 0.0, "class weights: cap must be positive");
  std::size_t total = 0;
  for (std::size_t c : counts) {
    total += c;
  }
  ClassWeights out;
  const double classes = static_cast<double>(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    double w = counts[c] == 0 ? cap : static_cast<double>(total) / (classes * static_cast<double>(counts[c]));
    if (counts[c] == 0 || w > cap) {
      out.warnings.push_back("class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                             " training items; weight clamped to " + std::to_string(cap));
      w = cap;
    }
    out.weights.push_back(w);
  }
  return out;
}

namespace {

void check_sizes(std::size_t preds, std::size_t labels, const Mask& mask) {
  require(preds == labels && labels == mask.size(), "metric: prediction, label and mask sizes differ");
}

}  // namespace

double balanced_accuracy(std::span<const int> preds, std::span<const int> labels, const Mask& mask,
                         std::size_t classes) {
  check_sizes(preds.size(), labels.size(), mask);
  std::vector<std::size_t> hits(classes, 0);
  std::vector<std::size_t> totals(classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!mask[i]) {
      continue;
    }
    const int y = labels[i];
    require(y >= 0 && static_cast<std::size_t>(y) < classes, "balanced accuracy: label out of range");
    ++totals[static_cast<std::size_t>(y)];
    if (preds[i] == y) {
      ++hits[static_cast<std::size_t>(y)];
    }
  }
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (totals[c] > 0) {
      sum += static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
      ++present;
    }
  }
  return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

double accuracy(std::span<const int> preds, std::span<const int> labels, const Mask& mask) {
  check_sizes(preds.size(), labels.size(), mask);
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (mask[i]) {
      ++total;
      hits += preds[i] == labels[i] ? 1 : 0;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

double f1_binary(std::span<const int> preds, std::span<const int> labels, const Mask& mask) {
  check_sizes(preds.size(), labels.size(), mask);
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!mask[i]) {
      continue;
    }
    const bool p = preds[i] == 1;
    const bool y = labels[i] == 1;
    tp += p && y ? 1.0 : 0.0;
    fp += p && !y ? 1.0 : 0.0;
    fn += !p && y ? 1.0 : 0.0;
  }
  const double precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

double mean_absolute(std::span<const double> preds, std::span<const double> targets, const Mask& mask) {
  require(preds.size() == targets.size() && targets.size() == mask.size(), "mae: size mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (mask[i]) {
      sum += std::abs(preds[i] - targets[i]);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

std::vector<int> argmax_rows(const Tensor& logits) {
  const std::size_t classes = logits.last_dim();
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < out.size(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (logits[r * classes + c] > logits[r * classes + best]) {
        best = c;
      }
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace egt
