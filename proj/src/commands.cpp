#include "egt/commands.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "egt/error.hpp"
#include "egt/gradcheck.hpp"
#include "egt/metrics.hpp"
#include "egt/params.hpp"
#include "egt/sbm.hpp"

namespace egt {

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "cannot write " + path.string());
  return out;
}

void emit(std::ostream& out, const nlohmann::json& record) { out << record.dump() << '\n' << std::flush; }

Corpus make_sbm_corpus(const SbmConfig& cfg, std::uint64_t base_seed, std::size_t count) {
  Corpus corpus;
  corpus.task = task_kind(cfg.task);
  corpus.num_classes = num_classes(cfg);
  corpus.node_vocab = node_vocab(cfg);
  corpus.graphs = sbm_corpus(cfg, base_seed, count);
  return corpus;
}

nlohmann::json label_distribution(const Corpus& corpus) {
  if (corpus.task == TaskKind::graph_scalar) {
    return nlohmann::json::array();
  }
  PreparedSplit split;
  split.graphs = corpus.graphs;
  return label_counts(split, static_cast<std::size_t>(corpus.num_classes));
}

ModelConfig configured(const ModelConfig& model, const Corpus& corpus) {
  ModelConfig cfg = model;
  configure_for_corpus(cfg, corpus);
  validate(cfg);
  return cfg;
}

}  // namespace

nlohmann::json header_record(const std::string& command, const nlohmann::json& extra) {
  nlohmann::json j{{"record", "header"}, {"command", command}, {"timestamp", utc_timestamp()}};
  if (extra.is_object()) {
    for (const auto& [key, value] : extra.items()) {
      j[key] = value;
    }
  }
  return j;
}

DataSplits generate_splits(const RunSpec& spec) {
  return {make_sbm_corpus(spec.sbm, derive_seed(spec.data_seed, 0), spec.train_count),
          make_sbm_corpus(spec.sbm, derive_seed(spec.data_seed, 1), spec.val_count),
          make_sbm_corpus(spec.sbm, derive_seed(spec.data_seed, 2), spec.test_count)};
}

DataSplits load_splits(const RunSpec& spec) {
  if (spec.source == DataSource::sbm) {
    return generate_splits(spec);
  }
  DataSplits data{load_corpus(spec.corpus_dir / "train.jsonl"), load_corpus(spec.corpus_dir / "val.jsonl"),
                  load_corpus(spec.corpus_dir / "test.jsonl")};
  require(data.train.task == data.val.task && data.train.task == data.test.task, "corpus splits disagree on task kind");
  return data;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) {
    return a;
  }
  double sum = 0.0;
  for (double v : values) {
    sum += v;
  }
  a.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) {
      sq += (v - a.mean) * (v - a.mean);
    }
    a.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return a;
}

std::vector<RunRecord> train_seeds(const ModelConfig& model, const DataSplits& data, const TrainConfig& train,
                                   const std::vector<std::uint64_t>& seeds, EncodingCache* cache) {
  const ModelConfig cfg = configured(model, data.train);
  const PreparedSplit tr = prepare_split(data.train, cfg.pe, cache, corpus_fingerprint(data.train));
  const PreparedSplit va = prepare_split(data.val, cfg.pe, cache, corpus_fingerprint(data.val));
  const PreparedSplit te = prepare_split(data.test, cfg.pe, cache, corpus_fingerprint(data.test));
  std::vector<RunRecord> runs;
  for (std::uint64_t seed : seeds) {
    TrainConfig t = train;
    t.seed = seed;
    runs.push_back(egt::train(cfg, tr, va, te, t));
  }
  return runs;
}

void cmd_generate(const RunSpec& spec, std::ostream& log) {
  require(spec.source == DataSource::sbm, "generate: config must use data.source = sbm");
  std::filesystem::create_directories(spec.out_dir);
  const DataSplits data = generate_splits(spec);
  emit(log, header_record("generate", {{"config", to_json(spec)}}));
  const std::pair<const char*, const Corpus*> splits[] = {{"train", &data.train}, {"val", &data.val}, {"test", &data.test}};
  for (const auto& [name, corpus] : splits) {
    const auto path = spec.out_dir / (std::string(name) + ".jsonl");
    save_corpus(*corpus, path);
    emit(log, {{"record", "split"},
               {"split", name},
               {"path", path.string()},
               {"graphs", corpus->graphs.size()},
               {"labels", label_distribution(*corpus)},
               {"fingerprint", corpus_fingerprint(*corpus)}});
  }
}

TrainSummary cmd_train(const RunSpec& spec, std::ostream& log) {
  std::filesystem::create_directories(spec.out_dir);
  const DataSplits data = load_splits(spec);
  TrainSummary summary;
  summary.model = configured(spec.model, data.train);
  const auto cache_path = spec.out_dir / "encodings.jsonl";
  EncodingCache cache;
  if (std::filesystem::exists(cache_path)) {
    cache.load(cache_path);
  }
  const nlohmann::json header = header_record(
      "train", {{"config", to_json(spec)}, {"model", display_name(summary.model)}});
  emit(log, header);

  std::vector<double> test_scores;
  std::vector<double> train_scores;
  for (std::uint64_t seed : spec.seeds) {
    RunRecord run = train_seeds(summary.model, data, spec.train, {seed}, &cache).front();
    const std::string stem = "seed_" + std::to_string(seed);
    std::ofstream records = open_output(spec.out_dir / (stem + ".jsonl"));
    emit(records, header);
    for (const EpochRecord& e : run.epochs) {
      emit(records, to_json(e));
    }
    nlohmann::json summary_line = summary_json(run);
    emit(records, summary_line);
    emit(log, summary_line);

    Checkpoint checkpoint;
    checkpoint.config = summary.model;
    checkpoint.params = run.params;
    checkpoint.metadata = {{"seed", seed},
                           {"class_weights", run.class_weights},
                           {"batch_size", spec.train.batch_size},
                           {"best_epoch", run.best_epoch},
                           {"test", to_json(run.test)}};
    save_checkpoint(checkpoint, spec.out_dir / (stem + ".ckpt"));
    if (run.diverged) {
      emit(log, {{"record", "error"}, {"seed", seed}, {"message", "training diverged: " + run.message}});
      fail("training diverged for seed " + std::to_string(seed) + ": " + run.message);
    }
    test_scores.push_back(primary_metric(summary.model, run.test));
    train_scores.push_back(primary_metric(summary.model, run.train));
    summary.runs.push_back(std::move(run));
  }
  cache.save(cache_path);
  summary.test = aggregate(test_scores);
  summary.train = aggregate(train_scores);

  std::ofstream out = open_output(spec.out_dir / "summary.jsonl");
  emit(out, header);
  for (const RunRecord& run : summary.runs) {
    emit(out, summary_json(run));
  }
  const nlohmann::json agg{{"record", "aggregate"},
                           {"model", display_name(summary.model)},
                           {"metric", primary_metric_name(summary.model)},
                           {"runs", summary.runs.size()},
                           {"test_mean", summary.test.mean},
                           {"test_sd", summary.test.sd},
                           {"train_mean", summary.train.mean},
                           {"train_sd", summary.train.sd}};
  emit(out, agg);
  emit(log, agg);
  return summary;
}

nlohmann::json cmd_eval(const std::filesystem::path& checkpoint_path, const std::filesystem::path& corpus_path,
                        std::ostream& log) {
  require(std::filesystem::exists(checkpoint_path), "eval: checkpoint " + checkpoint_path.string() + " not found");
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  const Corpus corpus = load_corpus(corpus_path);
  ModelConfig expected = checkpoint.config;
  configure_for_corpus(expected, corpus);
  require(expected == checkpoint.config, "eval: corpus layout does not match the checkpoint's model");
  const auto weights = checkpoint.metadata.at("class_weights").get<std::vector<double>>();
  const auto batch_size = checkpoint.metadata.at("batch_size").get<std::size_t>();
  const PreparedSplit split = prepare_split(corpus, checkpoint.config.pe);
  const Metrics m = evaluate(checkpoint.config, checkpoint.params, split, weights, batch_size);
  emit(log, header_record("eval", {{"checkpoint", checkpoint_path.string()}, {"corpus", corpus_path.string()}}));
  const nlohmann::json record{{"record", "eval"},
                              {"model", display_name(checkpoint.config)},
                              {"metric", primary_metric_name(checkpoint.config)},
                              {"value", primary_metric(checkpoint.config, m)},
                              {"metrics", to_json(m)}};
  emit(log, record);
  return record;
}

ModelConfig gradcheck_config(Variant variant, bool gated, HeadKind head) {
  ModelConfig cfg;
  cfg.layers = 2;
  cfg.node_width = 8;
  cfg.edge_width = 4;
  cfg.heads = 2;
  cfg.key_width = 4;
  cfg.variant = variant;
  cfg.gated = gated;
  cfg.head = head;
  cfg.outputs = 2;
  cfg.pe = {PeKind::svd, 2, false};
  cfg.node_input = {FeatureKind::discrete, 3};
  cfg.edge_input = {FeatureKind::discrete, 2};
  return cfg;
}

GraphBatch gradcheck_batch(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Graph> graphs;
  for (std::size_t n : {5u, 4u}) {
    Graph g;
    g.n = n;
    g.directed = n == 4;
    g.adjacency.assign(n * n, 0.0);
    g.node_kind = FeatureKind::discrete;
    g.edge_kind = FeatureKind::discrete;
    g.edge_ids.assign(n * n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      g.node_ids.push_back(static_cast<int>(rng.uniform_int(0, 2)));
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || (g.directed ? rng.bernoulli(0.5) : (j > i && rng.bernoulli(0.5)))) {
          g.adjacency[i * n + j] = 1.0;
        }
      }
    }
    if (!g.directed) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          g.adjacency[i * n + j] = g.adjacency[j * n + i];
        }
      }
    }
    for (std::size_t p = 0; p < n * n; ++p) {
      if (g.adjacency[p] != 0.0) {
        g.edge_ids[p] = static_cast<int>(rng.uniform_int(0, 1));
      }
    }
    switch (cfg.head) {
      case HeadKind::node:
        g.task = TaskKind::node_label;
        for (std::size_t i = 0; i < n; ++i) {
          g.node_labels.push_back(i == 0 ? -1 : static_cast<int>(rng.uniform_int(0, 1)));
        }
        break;
      case HeadKind::graph:
        g.task = TaskKind::graph_label;
        g.graph_label = static_cast<int>(rng.uniform_int(0, 1));
        break;
      case HeadKind::edge:
        g.task = TaskKind::edge_label;
        g.edge_labels.assign(n * n, -1);
        for (std::size_t p = 0; p < n * n; ++p) {
          if (p / n != p % n) {
            g.edge_labels[p] = static_cast<int>(rng.uniform_int(0, 1));
          }
        }
        break;
    }
    validate(g);
    graphs.push_back(std::move(g));
  }
  GraphBatch batch = make_batch(std::span<const Graph>(graphs));
  if (cfg.pe.kind != PeKind::none) {
    PreparedSplit split;
    split.graphs = graphs;
    for (const Graph& g : graphs) {
      split.encodings.push_back(compute_encoding(cfg.pe.kind == PeKind::svd ? EncodingKind::svd : EncodingKind::laplacian,
                                                 Tensor({g.n, g.n}, g.adjacency), cfg.pe.rank));
    }
    const std::vector<std::size_t> all{0, 1};
    batch.pe = batch_of(split, all, cfg.pe).pe;
  }
  return batch;
}

GradcheckReport gradcheck_model(const ModelConfig& cfg, std::uint64_t seed, const std::string& fault_op,
                                double fault_scale) {
  const ParameterStore params = init_parameters(cfg, seed);
  const GraphBatch batch = gradcheck_batch(cfg, derive_seed(seed, 7));
  const std::vector<double> weights(cfg.outputs, 1.0);
  const std::string label = display_name(cfg) + "/" + std::string(to_string(cfg.head));

  Tape tape;
  if (!fault_op.empty()) {
    tape.inject_backward_fault(fault_op, fault_scale);
  }
  const ParameterBinding binding(tape, params, true);
  const Var loss = task_loss(tape, cfg, forward(tape, binding, cfg, batch).output, batch, weights);
  tape.backward(loss);
  const std::vector<Tensor> analytic = binding.gradients(tape);

  GradcheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    ParameterStore probe = params;
    auto f = [&](const Tensor& x) {
      probe.at(p) = x;
      Tape t;
      const ParameterBinding b(t, probe, false);
      return t.value(task_loss(t, cfg, forward(t, b, cfg, batch).output, batch, weights)).item();
    };
    const Tensor numeric = finite_diff_grad(f, params.at(p), 1e-5);
    GradcheckEntry entry{label, params.name(p), relative_error(analytic[p], numeric, report.floor), false};
    entry.passed = entry.relative_error < report.tolerance;
    report.passed = report.passed && entry.passed;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

GradcheckReport cmd_gradcheck(std::uint64_t seed, std::ostream& log) {
  emit(log, header_record("gradcheck", {{"seed", seed}}));
  GradcheckReport all;
  for (Variant variant : {Variant::egt, Variant::egt_simple, Variant::transformer, Variant::egt_constrained}) {
    for (bool gated : {true, false}) {
      for (HeadKind head : {HeadKind::node, HeadKind::graph, HeadKind::edge}) {
        const GradcheckReport report = gradcheck_model(gradcheck_config(variant, gated, head), seed);
        double worst = 0.0;
        for (const GradcheckEntry& e : report.entries) {
          emit(log, {{"record", "gradcheck"},
                     {"config", e.config},
                     {"tensor", e.tensor},
                     {"relative_error", e.relative_error},
                     {"passed", e.passed}});
          worst = std::max(worst, e.relative_error);
          all.entries.push_back(e);
        }
        all.passed = all.passed && report.passed;
      }
    }
  }
  double worst = 0.0;
  for (const GradcheckEntry& e : all.entries) {
    worst = std::max(worst, e.relative_error);
  }
  emit(log, {{"record", "gradcheck_summary"},
             {"tensors", all.entries.size()},
             {"max_relative_error", worst},
             {"tolerance", all.tolerance},
             {"passed", all.passed}});
  return all;
}

std::vector<AblationRow> cmd_ablate(const RunSpec& spec, std::ostream& log) {
  std::filesystem::create_directories(spec.out_dir);
  const DataSplits data = load_splits(spec);
  EncodingCache cache;
  const nlohmann::json header = header_record("ablate", {{"config", to_json(spec)}});
  emit(log, header);
  std::ofstream out = open_output(spec.out_dir / "ablation.jsonl");
  emit(out, header);

  std::vector<AblationRow> rows;
  for (PeKind pe : spec.ablate_pe) {
    for (Variant variant : spec.ablate_variants) {
      ModelConfig model = spec.model;
      model.variant = variant;
      model.pe.kind = pe;
      model = configured(model, data.train);
      const auto runs = train_seeds(model, data, spec.train, spec.seeds, &cache);
      std::vector<double> test;
      std::vector<double> train;
      for (const RunRecord& run : runs) {
        require(!run.diverged, "ablate: " + display_name(model) + " diverged for seed " + std::to_string(run.seed));
        test.push_back(primary_metric(model, run.test));
        train.push_back(primary_metric(model, run.train));
      }
      AblationRow row{display_name(model), variant, pe, analytic_parameter_count(model), aggregate(test), aggregate(train)};
      emit(out, {{"record", "ablation"},
                 {"model", row.name},
                 {"parameters", row.parameters},
                 {"metric", primary_metric_name(model)},
                 {"test_mean", row.test.mean},
                 {"test_sd", row.test.sd},
                 {"train_mean", row.train.mean},
                 {"train_sd", row.train.sd},
                 {"seeds", spec.seeds}});
      rows.push_back(row);
    }
  }

  std::ostringstream table;
  table << std::left << std::setw(24) << "model" << std::right << std::setw(10) << "#params" << std::setw(22)
        << "test" << std::setw(22) << "train" << '\n';
  for (const AblationRow& r : rows) {
    std::ostringstream t;
    std::ostringstream tr;
    t << std::fixed << std::setprecision(3) << 100.0 * r.test.mean << " +- " << 100.0 * r.test.sd;
    tr << std::fixed << std::setprecision(3) << 100.0 * r.train.mean << " +- " << 100.0 * r.train.sd;
    table << std::left << std::setw(24) << r.name << std::right << std::setw(10) << r.parameters << std::setw(22)
          << t.str() << std::setw(22) << tr.str() << '\n';
  }
  std::ofstream text = open_output(spec.out_dir / "ablation.txt");
  text << table.str();
  log << table.str() << std::flush;
  return rows;
}

}  // namespace egt
