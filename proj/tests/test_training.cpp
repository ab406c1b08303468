#include <doctest.h>

#include <sstream>

#include "dirt/errors.hpp"
#include "dirt/evaluation.hpp"
#include "dirt/synthetic.hpp"
#include "dirt/training.hpp"
#include "test_util.hpp"

using namespace dirt;

namespace {

DirtConfig tiny_dirt() {
  DirtConfig c;
  c.hidden = 4;
  c.seq_len = 6;
  c.seed = 3;
  return c;
}

GeneratedData small_corpus(std::uint64_t seed = 21) {
  GenConfig g;
  g.students = 60;
  g.questions = 80;
  g.concepts = 6;
  g.vocab_size = 120;
  g.dim = 6;
  g.mean_records = 25;
  g.focus_concepts = 3;
  g.text_mean = 8;
  g.text_sd = 3;
  g.text_max = 16;
  g.seed = seed;
  return generate(g);
}

}  // namespace

TEST_CASE("training on the toy corpus lowers the loss") {
  const Corpus c = dirt::testing::toy_corpus();
  DirtModel m(c, tiny_dirt());
  TrainConfig t;
  t.max_epochs = 5;
  t.dropout = 0.0;
  t.learning_rate = 0.01;
  t.validation_fraction = 0.0;
  t.batch_size = 2;
  const auto report = train(m, c.records(), t);
  REQUIRE(report.epochs.size() == 5);
  CHECK(report.epochs[4].train_loss < report.epochs[0].train_loss);
  for (const auto& e : report.epochs) {
    CHECK(std::isfinite(e.train_loss));
    CHECK(std::isfinite(e.val_loss));
  }
}

TEST_CASE("patience zero stops at the first epoch without improvement") {
  const auto data = small_corpus();
  ExperimentConfig config;
  config.dirt = tiny_dirt();
  config.train.learning_rate = 0.05;
  config.train.max_epochs = 40;
  config.train.patience = 0;
  config.train.seed = 5;
  DirtModel m(data.corpus, config.dirt);
  const auto report = train(m, data.corpus.records(), config.train);
  REQUIRE(report.stopping_epoch < config.train.max_epochs);
  REQUIRE(report.epochs.size() == report.stopping_epoch);
  double best = mean_nll(DirtModel(data.corpus, config.dirt).predict(validation_split(data.corpus.records(), config.train).test),
                         validation_split(data.corpus.records(), config.train).test);
  for (std::size_t i = 0; i + 1 < report.epochs.size(); ++i) {
    CHECK(report.epochs[i].val_loss < best);
    best = report.epochs[i].val_loss;
  }
  CHECK(report.epochs.back().val_loss >= best);
  CHECK(report.best_epoch == report.stopping_epoch - 1);
}

TEST_CASE("the best parameters are restored") {
  const auto data = small_corpus();
  TrainConfig t;
  t.learning_rate = 0.05;
  t.max_epochs = 8;
  t.patience = 2;
  t.seed = 8;
  DirtModel m(data.corpus, tiny_dirt());
  const auto report = train(m, data.corpus.records(), t);
  const auto val = validation_split(data.corpus.records(), t).test;
  REQUIRE_FALSE(val.empty());
  CHECK(mean_nll(m.predict(val), val) == report.best_val_loss);
  if (report.best_epoch > 0) CHECK(report.epochs[report.best_epoch - 1].val_loss == report.best_val_loss);
}

TEST_CASE("same seed gives the same trajectory and parameters") {
  const auto data = small_corpus();
  TrainConfig t;
  t.max_epochs = 3;
  t.seed = 11;
  DirtModel a(data.corpus, tiny_dirt()), b(data.corpus, tiny_dirt());
  const auto ra = train(a, data.corpus.records(), t);
  const auto rb = train(b, data.corpus.records(), t);
  REQUIRE(ra.epochs.size() == rb.epochs.size());
  for (std::size_t i = 0; i < ra.epochs.size(); ++i) {
    CHECK(ra.epochs[i].train_loss == rb.epochs[i].train_loss);
    CHECK(ra.epochs[i].val_loss == rb.epochs[i].val_loss);
  }
  auto pa = a.parameters().begin();
  for (const auto& p : b.parameters()) CHECK((pa++)->value == p.value);

  t.seed = 12;
  DirtModel other(data.corpus, tiny_dirt());
  const auto rc = train(other, data.corpus.records(), t);
  CHECK(rc.epochs[0].train_loss != ra.epochs[0].train_loss);
}

TEST_CASE("validation split is a seeded partition") {
  const auto data = small_corpus();
  TrainConfig t;
  t.seed = 4;
  const auto records = data.corpus.records();
  const auto s = validation_split(records, t);
  CHECK(s.train.size() + s.test.size() == records.size());
  const double share = static_cast<double>(s.test.size()) / static_cast<double>(records.size());
  CHECK(share == doctest::Approx(0.1).epsilon(0.02));
  CHECK(validation_split(records, t).test_index == s.test_index);
  t.validation_fraction = 0.0;
  CHECK(validation_split(records, t).test.empty());
}

TEST_CASE("invalid training configs are rejected") {
  const Corpus c = dirt::testing::toy_corpus();
  DirtModel m(c, tiny_dirt());
  TrainConfig t;
  t.batch_size = 0;
  CHECK_THROWS_AS(train(m, c.records(), t), std::invalid_argument);
  t = {};
  t.dropout = 1.0;
  CHECK_THROWS_AS(train(m, c.records(), t), std::invalid_argument);
  t = {};
  CHECK_THROWS_AS(train(m, std::span<const ResponseRecord>{}, t), DataError);
}

TEST_CASE("divergence reports the last finite loss") {
  const Corpus c = dirt::testing::toy_corpus();
  IrtModel m(c.student_count(), c.question_count());
  TrainConfig t;
  t.learning_rate = 1e306;
  t.validation_fraction = 0.0;
  t.max_epochs = 5;
  t.batch_size = 1;
  try {
    train(m, c.records(), t);
    FAIL("expected divergence");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("last finite loss") != std::string::npos);
  }
}

TEST_CASE("classical models train with either optimizer") {
  const auto data = small_corpus();
  ExperimentConfig config;
  for (ModelKind kind : {ModelKind::Irt, ModelKind::Mirt, ModelKind::Dina}) {
    auto full = make_model(kind, data.corpus, config);
    const auto report = fit_model(*full, data.corpus.records(), config);
    REQUIRE(report.epochs.size() == 1);
    CHECK(report.epochs[0].val_loss == report.epochs[0].train_loss);
    CHECK(report.best_val_loss == report.epochs[0].train_loss);
    CHECK(full->kind() == kind);

    ExperimentConfig mini = config;
    mini.classical_full_batch = false;
    mini.train.max_epochs = 3;
    mini.train.learning_rate = 0.05;
    auto m = make_model(kind, data.corpus, mini);
    const auto r = fit_model(*m, data.corpus.records(), mini);
    CHECK(r.epochs.size() == 3);
    CHECK(r.epochs.back().train_loss < r.epochs.front().train_loss);
  }
}

TEST_CASE("training log format") {
  TrainReport r;
  r.epochs.push_back({1, 0.5, 0.25, 0.75});
  r.epochs.push_back({2, 0.4, 0.3, std::nullopt});
  std::ostringstream out;
  write_train_log(out, r);
  CHECK(out.str() == "epoch\ttrain_loss\tval_loss\tval_auc\n1\t0.500000\t0.250000\t0.750000\n2\t0.400000\t0.300000\tNA\n");
}

TEST_CASE("epoch callback sees every epoch") {
  const Corpus c = dirt::testing::toy_corpus();
  DirtModel m(c, tiny_dirt());
  TrainConfig t;
  t.max_epochs = 3;
  t.patience = 10;
  std::vector<std::size_t> seen;
  train(m, c.records(), t, [&](const EpochStats& s) { seen.push_back(s.epoch); });
  CHECK(seen == std::vector<std::size_t>{1, 2, 3});
}
