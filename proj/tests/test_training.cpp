#include <cmath>
#include <numeric>

#include "doctest.h"
#include "egt/error.hpp"
#include "egt/metrics.hpp"
#include "egt/optim.hpp"
#include "egt/sbm.hpp"
#include "egt/trainer.hpp"
#include "support.hpp"

using namespace egt;

namespace {

double cross_entropy(const Tensor& logits, const std::vector<int>& labels, const Mask& mask,
                     const std::vector<double>& weights) {
  Tape tape;
  return tape.value(ops::weighted_cross_entropy(tape, tape.constant(logits), labels, mask, weights)).item();
}

double mae(const Tensor& pred, const std::vector<double>& target, const Mask& mask) {
  Tape tape;
  return tape.value(ops::mean_absolute_error(tape, tape.constant(pred), target, mask)).item();
}

Mask full_mask(std::size_t n) { return Mask({n}, true); }

struct Fixture {
  ModelConfig cfg;
  PreparedSplit train, val, test;
};

Fixture small_fixture(PeKind pe = PeKind::none) {
  SbmConfig sbm;
  sbm.n_min = 8;
  sbm.n_max = 12;
  auto corpus = [&](std::uint64_t seed, std::size_t count) {
    Corpus c;
    c.task = task_kind(sbm.task);
    c.num_classes = num_classes(sbm);
    c.node_vocab = node_vocab(sbm);
    c.graphs = sbm_corpus(sbm, seed, count);
    return c;
  };
  Fixture f;
  f.cfg.layers = 1;
  f.cfg.node_width = 8;
  f.cfg.edge_width = 4;
  f.cfg.heads = 2;
  f.cfg.pe = {pe, 2, pe != PeKind::none};
  const Corpus train = corpus(1, 24);
  configure_for_corpus(f.cfg, train);
  f.train = prepare_split(train, f.cfg.pe);
  f.val = prepare_split(corpus(2, 8), f.cfg.pe);
  f.test = prepare_split(corpus(3, 8), f.cfg.pe);
  return f;
}

TrainConfig short_run(std::size_t epochs) {
  TrainConfig t;
  t.lr_init = 5e-3;
  t.batch_size = 8;
  t.max_epochs = epochs;
  t.plateau_patience = 2;
  t.seed = 7;
  return t;
}

}  // namespace

TEST_SUITE("training") {
  TEST_CASE("cross-entropy examples") {
    const Tensor logits({4, 3}, {0.2, -1.0, 0.5, 1.0, 0.0, 0.0, -0.3, 0.3, 2.0, 0.0, 1.0, -1.0});
    const std::vector<int> labels{0, 1, 2, 1};
    const Mask mask = full_mask(4);
    double expect = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      double z = 0.0;
      for (std::size_t c = 0; c < 3; ++c) {
        z += std::exp(logits[i * 3 + c]);
      }
      expect += std::log(z) - logits[i * 3 + static_cast<std::size_t>(labels[i])];
    }
    CHECK(cross_entropy(logits, labels, mask, {1.0, 1.0, 1.0}) == doctest::Approx(expect / 4).epsilon(1e-12));

    const std::vector<std::size_t> balanced{5, 5, 5};
    CHECK(class_weights(balanced).weights == std::vector<double>{1.0, 1.0, 1.0});

    CHECK(cross_entropy(Tensor({2, 2}, {0.0, 0.0, 1.0, 1.0}), {0, 1}, full_mask(2), {1.0, 1.0}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(cross_entropy(Tensor({2, 2}, {60.0, -60.0, -60.0, 60.0}), {0, 1}, full_mask(2), {1.0, 1.0}) < 1e-40);

    Mask partial({2});
    partial.set(1, true);
    CHECK(cross_entropy(Tensor({2, 2}, {-50.0, 50.0, 0.0, 0.0}), {0, 0}, partial, {1.0, 1.0}) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  TEST_CASE("mean absolute error examples") {
    CHECK(mae(Tensor({2, 1}, {1.0, 3.0}), {2.0, 2.0}, full_mask(2)) == 1.0);
    CHECK(mae(Tensor({2, 1}, {2.0, 2.0}), {2.0, 2.0}, full_mask(2)) == 0.0);
    Mask partial({2});
    partial.set(0, true);
    CHECK(mae(Tensor({2, 1}, {1.5, 90.0}), {2.0, 2.0}, partial) == 0.5);
  }

  TEST_CASE("classification metrics") {
    const Mask m4 = full_mask(4);
    CHECK(balanced_accuracy(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 1, 0, 1}, m4, 2) == 0.5);
    CHECK(accuracy(std::vector<int>{0, 1, 1, 1}, std::vector<int>{0, 1, 0, 1}, m4) == 0.75);
    // Imbalanced: recall 1 on class 0 (3 items), 0 on class 1 (1 item).
    CHECK(balanced_accuracy(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 0, 0, 1}, m4, 2) == 0.5);

    // TP=2, FP=1, FN=1.
    const Mask m5 = full_mask(5);
    CHECK(f1_binary(std::vector<int>{1, 1, 1, 0, 0}, std::vector<int>{1, 1, 0, 1, 0}, m5) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(f1_binary(std::vector<int>{0, 0}, std::vector<int>{1, 0}, full_mask(2)) == 0.0);

    Mask partial({3});
    partial.set(0, true);
    partial.set(1, true);
    CHECK(accuracy(std::vector<int>{1, 0, 1}, std::vector<int>{1, 0, 0}, partial) == 1.0);

    CHECK(argmax_rows(Tensor({2, 3}, {1.0, 3.0, 3.0, -1.0, -2.0, -3.0})) == std::vector<int>{1, 0});
  }

  TEST_CASE("random predictions score at chance") {
    Rng rng(8);
    const std::size_t n = 60000;
    std::vector<int> preds(n), labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i % 6);
      preds[i] = static_cast<int>(rng.uniform_int(0, 5));
    }
    CHECK(std::abs(balanced_accuracy(preds, labels, full_mask(n), 6) - 1.0 / 6.0) <= 0.01);
  }

  TEST_CASE("class weights") {
    const std::vector<std::size_t> counts{10, 30, 60};
    const ClassWeights w = class_weights(counts);
    CHECK(w.warnings.empty());
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      total += w.weights[c] * static_cast<double>(counts[c]);
    }
    CHECK(std::abs(total - 100.0) <= 1e-9);
    CHECK(w.weights[0] == doctest::Approx(100.0 / 30.0));

    const std::vector<std::size_t> missing{50, 0};
    const ClassWeights clamped = class_weights(missing);
    CHECK(clamped.weights[1] == kClassWeightCap);
    CHECK(clamped.warnings.size() == 1);
    const std::vector<std::size_t> rare{10000, 1};
    CHECK(class_weights(rare).weights[1] == kClassWeightCap);
    CHECK(class_weights(rare).warnings.size() == 1);
  }

  TEST_CASE("adam steps") {
    ParameterStore s;
    s.add("a", Tensor({3}, {1.0, -2.0, 0.5}));
    s.add("b", Tensor({1}, {4.0}));
    const ParameterStore before = s;
    Adam zero(s);
    zero.step(s, {Tensor({3}), Tensor({1})}, 0.1);
    CHECK(s == before);

    Adam adam(s);
    const double lr = 1e-3;
    const std::vector<Tensor> grads{Tensor({3}, {0.3, -7.0, 1e-9}), Tensor({1}, {2.0})};
    adam.step(s, grads, lr);
    for (std::size_t k = 0; k < 3; ++k) {
      const double g = grads[0][k];
      const double expect = lr * std::abs(g) / (std::abs(g) + 1e-8);
      CHECK(std::abs(before.at("a")[k] - s.at("a")[k]) == doctest::Approx(expect).epsilon(1e-9));
      CHECK((s.at("a")[k] - before.at("a")[k]) * g < 0.0);
    }
    CHECK(adam.steps() == 1);

    ParameterStore s1 = before, s2 = before;
    Adam a1(s1), a2(s2);
    for (int i = 0; i < 5; ++i) {
      a1.step(s1, grads, lr);
      a2.step(s2, grads, lr);
    }
    CHECK(s1 == s2);
  }

  TEST_CASE("plateau scheduler") {
    PlateauScheduler improving(1.0, 0.5, 2, 1e-3);
    for (double loss : {5.0, 4.0, 3.0, 2.0, 1.0}) {
      improving.observe(loss);
    }
    CHECK(improving.lr() == 1.0);

    const std::size_t patience = 3;
    PlateauScheduler flat(1.0, 0.5, patience, 1e-3);
    for (std::size_t i = 0; i < patience + 1; ++i) {
      flat.observe(2.0);
    }
    CHECK(flat.lr() == 0.5);
    CHECK(flat.reductions() == 1);

    PlateauScheduler floor(1e-3, 0.5, 1, 1e-3);
    for (int i = 0; i < 10; ++i) {
      floor.observe(1.0);
    }
    CHECK(floor.lr() == 1e-3);

    PlateauScheduler bounded(1.0, 0.5, 1, 0.1);
    double previous = bounded.lr();
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      const double lr = bounded.observe(rng.uniform());
      CHECK(lr <= previous);
      CHECK(lr >= 0.1);
      previous = lr;
    }
  }

  TEST_CASE("zero epochs returns initialization metrics") {
    const Fixture f = small_fixture();
    const RunRecord r = train(f.cfg, f.train, f.val, f.test, short_run(0));
    CHECK(r.epochs.size() == 1);
    CHECK(r.best_epoch == 0);
    CHECK(!r.diverged);
    CHECK(r.params == init_parameters(f.cfg, derive_seed(7, 0)));
    CHECK(r.val == r.epochs[0].val);
    CHECK(r.test == evaluate(f.cfg, r.params, f.test, r.class_weights, 8));
  }

  TEST_CASE("training is deterministic and keeps the best weights") {
    const Fixture f = small_fixture(PeKind::svd);
    const TrainConfig t = short_run(6);
    const RunRecord a = train(f.cfg, f.train, f.val, f.test, t);
    const RunRecord b = train(f.cfg, f.train, f.val, f.test, t);
    CHECK(a == b);
    CHECK(a.epochs.size() == 7);
    double best = INFINITY;
    std::size_t best_epoch = 0;
    double previous_lr = INFINITY;
    for (const EpochRecord& e : a.epochs) {
      if (e.val.loss < best) {
        best = e.val.loss;
        best_epoch = e.epoch;
      }
      CHECK(e.lr <= previous_lr);
      CHECK(e.lr >= t.min_lr);
      previous_lr = e.lr;
    }
    CHECK(a.best_epoch == best_epoch);
    CHECK(a.val == evaluate(f.cfg, a.params, f.val, a.class_weights, t.batch_size));
    CHECK(a.val.loss == best);
    CHECK(a.epochs.back().val.loss >= 0.0);
    CHECK(a.epochs[best_epoch].val.loss < a.epochs[0].val.loss);

    TrainConfig other = t;
    other.seed = 8;
    CHECK(!(train(f.cfg, f.train, f.val, f.test, other).params == a.params));
  }

  TEST_CASE("divergent training is reported") {
    const Fixture f = small_fixture();
    TrainConfig t = short_run(3);
    t.lr_init = 1e300;
    const RunRecord r = train(f.cfg, f.train, f.val, f.test, t);
    CHECK(r.diverged);
    CHECK(!r.message.empty());
    CHECK(summary_json(r).at("diverged").get<bool>());
  }

  TEST_CASE("train config validation") {
    TrainConfig t;
    CHECK_NOTHROW(validate(t));
    t.plateau_factor = 1.0;
    CHECK_THROWS_AS(validate(t), Error);
    t = TrainConfig{};
    t.plateau_patience = 0;
    CHECK_THROWS_AS(validate(t), Error);
  }
}
