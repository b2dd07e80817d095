#include "egt/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "egt/error.hpp"
#include "egt/metrics.hpp"
#include "egt/optim.hpp"

namespace egt {

void validate(const TrainConfig& cfg) {
  require(cfg.lr_init > 0.0, "train: lr_init must be positive");
  require(cfg.batch_size >= 1, "train: batch_size must be at least 1");
  require(cfg.plateau_patience >= 1, "train: plateau_patience must be at least 1");
  require(cfg.plateau_factor > 0.0 && cfg.plateau_factor < 1.0, "train: plateau_factor must lie in (0, 1)");
  require(cfg.min_lr >= 0.0 && cfg.min_lr <= cfg.lr_init, "train: need 0 <= min_lr <= lr_init");
  require(cfg.eval_every >= 1, "train: eval_every must be at least 1");
}

PreparedSplit prepare_split(const Corpus& corpus, const PeConfig& pe, EncodingCache* cache,
                            const std::string& corpus_id) {
  PreparedSplit split;
  split.graphs = corpus.graphs;
  if (pe.kind == PeKind::none) {
    return split;
  }
  const EncodingKind kind = pe.kind == PeKind::svd ? EncodingKind::svd : EncodingKind::laplacian;
  split.encodings.resize(split.graphs.size());
  for (std::size_t i = 0; i < split.graphs.size(); ++i) {
    const Graph& g = split.graphs[i];
    Tensor a({g.n, g.n}, with_self_loops(g).adjacency);
    if (cache != nullptr) {
      split.encodings[i] = cache->get({corpus_id, i, kind, pe.rank}, a);
    } else {
      split.encodings[i] = compute_encoding(kind, a, pe.rank);
    }
  }
  return split;
}

GraphBatch batch_of(const PreparedSplit& split, std::span<const std::size_t> indices, const PeConfig& pe) {
  std::vector<const Graph*> members;
  members.reserve(indices.size());
  for (std::size_t i : indices) {
    members.push_back(&split.graphs.at(i));
  }
  GraphBatch batch = make_batch(std::span<const Graph* const>(members));
  if (pe.kind != PeKind::none) {
    const std::size_t width = pe.width();
    const std::size_t m = batch.max_n;
    batch.pe = Tensor({batch.size, m, width});
    for (std::size_t g = 0; g < indices.size(); ++g) {
      const Tensor& enc = split.encodings.at(indices[g]);
      require(enc.rank() == 2 && enc.dim(1) == width, "batch: encoding width mismatch");
      std::copy(enc.data().begin(), enc.data().end(),
                batch.pe.data().begin() + static_cast<std::ptrdiff_t>(g * m * width));
    }
  }
  return batch;
}

void configure_for_corpus(ModelConfig& cfg, const Corpus& corpus) {
  require(!corpus.graphs.empty(), "corpus has no graphs");
  const Graph& g = corpus.graphs.front();
  cfg.node_input = {g.node_kind, g.node_kind == FeatureKind::discrete     ? static_cast<std::size_t>(corpus.node_vocab)
                                 : g.node_kind == FeatureKind::continuous ? g.node_dim
                                                                          : 0};
  cfg.edge_input = {g.edge_kind, g.edge_kind == FeatureKind::discrete     ? static_cast<std::size_t>(corpus.edge_vocab)
                                 : g.edge_kind == FeatureKind::continuous ? g.edge_dim
                                                                          : 0};
  switch (corpus.task) {
    case TaskKind::node_label:
      cfg.head = HeadKind::node;
      break;
    case TaskKind::edge_label:
      cfg.head = HeadKind::edge;
      break;
    case TaskKind::graph_label:
    case TaskKind::graph_scalar:
      cfg.head = HeadKind::graph;
      break;
  }
  cfg.regression = corpus.task == TaskKind::graph_scalar;
  cfg.outputs = cfg.regression ? 1 : static_cast<std::size_t>(corpus.num_classes);
}

double primary_metric(const ModelConfig& cfg, const Metrics& m) {
  if (cfg.regression) {
    return m.mae;
  }
  return cfg.head == HeadKind::edge && cfg.outputs == 2 ? m.f1 : m.balanced_accuracy;
}

std::string primary_metric_name(const ModelConfig& cfg) {
  if (cfg.regression) {
    return "mae";
  }
  return cfg.head == HeadKind::edge && cfg.outputs == 2 ? "f1" : "balanced_accuracy";
}

std::vector<std::size_t> label_counts(const PreparedSplit& split, std::size_t classes) {
  std::vector<std::size_t> counts(classes, 0);
  auto add = [&](int y) {
    if (y >= 0) {
      require(static_cast<std::size_t>(y) < classes, "label " + std::to_string(y) + " outside class range");
      ++counts[static_cast<std::size_t>(y)];
    }
  };
  for (const Graph& g : split.graphs) {
    switch (g.task) {
      case TaskKind::node_label:
        std::for_each(g.node_labels.begin(), g.node_labels.end(), add);
        break;
      case TaskKind::edge_label:
        std::for_each(g.edge_labels.begin(), g.edge_labels.end(), add);
        break;
      case TaskKind::graph_label:
        add(g.graph_label);
        break;
      case TaskKind::graph_scalar:
        break;
    }
  }
  return counts;
}

Metrics evaluate(const ModelConfig& cfg, const ParameterStore& params, const PreparedSplit& split,
                 std::span<const double> class_weights, std::size_t batch_size) {
  require(batch_size >= 1, "evaluate: batch_size must be at least 1");
  std::vector<int> preds;
  std::vector<int> labels;
  std::vector<double> pred_values;
  std::vector<double> targets;
  std::vector<std::uint8_t> mask_bits;
  double loss_sum = 0.0;
  std::size_t items = 0;
  std::vector<std::size_t> order(split.graphs.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    const GraphBatch batch = batch_of(split, std::span(order).subspan(start, stop - start), cfg.pe);
    Tape tape;
    const ParameterBinding binding(tape, params, false);
    const ForwardResult out = forward(tape, binding, cfg, batch);
    const std::size_t count = batch.target_mask.count();
    if (count > 0) {
      loss_sum += tape.value(task_loss(tape, cfg, out.output, batch, class_weights)).item() * static_cast<double>(count);
    }
    items += count;
    const Tensor& output = tape.value(out.output);
    if (cfg.regression) {
      pred_values.insert(pred_values.end(), output.data().begin(), output.data().end());
      targets.insert(targets.end(), batch.values.begin(), batch.values.end());
    } else {
      const auto p = argmax_rows(output);
      preds.insert(preds.end(), p.begin(), p.end());
      labels.insert(labels.end(), batch.labels.begin(), batch.labels.end());
    }
    mask_bits.insert(mask_bits.end(), batch.target_mask.data().begin(), batch.target_mask.data().end());
  }
  Mask mask({mask_bits.size()});
  for (std::size_t i = 0; i < mask_bits.size(); ++i) {
    mask.set(i, mask_bits[i] != 0);
  }
  Metrics m;
  m.items = items;
  m.loss = items > 0 ? loss_sum / static_cast<double>(items) : 0.0;
  if (cfg.regression) {
    m.mae = mean_absolute(pred_values, targets, mask);
  } else {
    m.balanced_accuracy = balanced_accuracy(preds, labels, mask, cfg.outputs);
    m.accuracy = accuracy(preds, labels, mask);
    if (cfg.outputs == 2) {
      m.f1 = f1_binary(preds, labels, mask);
    }
  }
  return m;
}

RunRecord train(const ModelConfig& cfg, const PreparedSplit& train_split, const PreparedSplit& val_split,
                const PreparedSplit& test_split, const TrainConfig& tcfg) {
  validate(cfg);
  validate(tcfg);
  require(!train_split.graphs.empty() && !val_split.graphs.empty(), "train: empty train or validation split");

  RunRecord record;
  record.seed = tcfg.seed;
  record.params = init_parameters(cfg, derive_seed(tcfg.seed, 0));
  if (cfg.regression) {
    record.class_weights = {1.0};
  } else {
    const auto counts = label_counts(train_split, cfg.outputs);
    ClassWeights weights = class_weights(counts);
    record.class_weights = weights.weights;
    record.warnings = weights.warnings;
  }
  const std::vector<double>& cw = record.class_weights;

  ParameterStore params = record.params;
  Adam adam(params);
  PlateauScheduler scheduler(tcfg.lr_init, tcfg.plateau_factor, tcfg.plateau_patience, tcfg.min_lr);
  Rng order_rng(derive_seed(tcfg.seed, 1));
  Rng augment_rng(derive_seed(tcfg.seed, 2));

  double best_loss = 0.0;
  try {
    EpochRecord initial;
    initial.train_loss = evaluate(cfg, params, train_split, cw, tcfg.batch_size).loss;
    initial.val = evaluate(cfg, params, val_split, cw, tcfg.batch_size);
    initial.lr = scheduler.lr();
    best_loss = initial.val.loss;
    scheduler.observe(initial.val.loss);
    record.epochs.push_back(initial);

    std::vector<std::size_t> order(train_split.graphs.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
      order_rng.shuffle(order);
      const double lr = scheduler.lr();
      double loss_sum = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
        const std::size_t stop = std::min(order.size(), start + tcfg.batch_size);
        const GraphBatch batch = batch_of(train_split, std::span(order).subspan(start, stop - start), cfg.pe);
        if (batch.target_mask.count() == 0) {
          continue;
        }
        Tape tape;
        const ParameterBinding binding(tape, params, true);
        ForwardOptions options;
        options.train = true;
        options.rng = &augment_rng;
        const ForwardResult out = forward(tape, binding, cfg, batch, options);
        const Var loss = task_loss(tape, cfg, out.output, batch, cw);
        tape.backward(loss);
        adam.step(params, binding.gradients(tape), lr);
        loss_sum += tape.value(loss).item();
        ++batches;
      }
      if (epoch % tcfg.eval_every != 0 && epoch != tcfg.max_epochs) {
        continue;
      }
      EpochRecord rec;
      rec.epoch = epoch;
      rec.train_loss = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
      rec.val = evaluate(cfg, params, val_split, cw, tcfg.batch_size);
      rec.lr = lr;
      if (rec.val.loss < best_loss) {
        best_loss = rec.val.loss;
        record.best_epoch = epoch;
        record.params = params;
      }
      scheduler.observe(rec.val.loss);
      record.epochs.push_back(rec);
    }
  } catch (const NumericError& e) {
    record.diverged = true;
    record.message = e.what();
  }

  record.train = evaluate(cfg, record.params, train_split, cw, tcfg.batch_size);
  record.val = evaluate(cfg, record.params, val_split, cw, tcfg.batch_size);
  if (!test_split.graphs.empty()) {
    record.test = evaluate(cfg, record.params, test_split, cw, tcfg.batch_size);
  }
  return record;
}

nlohmann::json to_json(const Metrics& m) {
  return nlohmann::json{{"loss", m.loss},         {"balanced_accuracy", m.balanced_accuracy},
                        {"accuracy", m.accuracy}, {"f1", m.f1},
                        {"mae", m.mae},           {"items", m.items}};
}

nlohmann::json to_json(const EpochRecord& e) {
  return nlohmann::json{
      {"record", "epoch"}, {"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val", to_json(e.val)}, {"lr", e.lr}};
}

nlohmann::json summary_json(const RunRecord& r) {
  nlohmann::json j{{"record", "summary"},
                   {"seed", r.seed},
                   {"best_epoch", r.best_epoch},
                   {"epochs", r.epochs.empty() ? 0 : r.epochs.back().epoch},
                   {"train", to_json(r.train)},
                   {"val", to_json(r.val)},
                   {"test", to_json(r.test)},
                   {"class_weights", r.class_weights},
                   {"parameters", r.params.scalar_count()},
                   {"diverged", r.diverged}};
  if (!r.message.empty()) {
    j["message"] = r.message;
  }
  if (!r.warnings.empty()) {
    j["warnings"] = r.warnings;
  }
  return j;
}

}  // namespace egt
