#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <sstream>

#include "dirt/evaluation.hpp"
#include "dirt/random.hpp"
#include "dirt/synthetic.hpp"
#include "test_util.hpp"

using namespace dirt;

namespace {

// Share of positive/negative pairs ranked correctly, ties counting one half.
std::optional<double> brute_force_auc(const std::vector<double>& p, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += p[i] > p[j] ? 1.0 : (p[i] == p[j] ? 0.5 : 0.0);
    }
  if (pairs == 0.0) return std::nullopt;
  return wins / pairs;
}

GeneratedData sweep_corpus() {
  GenConfig g;
  g.mode = GeneratorMode::Irt;
  g.students = 80;
  g.questions = 40;
  g.concepts = 4;
  g.vocab_size = 60;
  g.dim = 4;
  g.mean_records = 30;
  g.seed = 17;
  return generate(g);
}

}  // namespace

TEST_CASE("metric examples") {
  const std::vector<double> p{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(compute_metrics(p, y).auc.value() == 0.75);

  const std::vector<double> exact{0.0, 1.0, 1.0, 0.0};
  const std::vector<int> ey{0, 1, 1, 0};
  const auto perfect = compute_metrics(exact, ey);
  CHECK(perfect.rmse == 0.0);
  CHECK(perfect.mae == 0.0);
  CHECK(perfect.acc == 1.0);
  CHECK(perfect.auc.value() == 1.0);

  const std::vector<double> half(4, 0.5);
  const auto flat = compute_metrics(half, y, "flat");
  CHECK(flat.rmse == 0.5);
  CHECK(flat.mae == 0.5);
  CHECK(flat.auc.value() == 0.5);
  CHECK(flat.acc == 0.5);  // ties predict 1
  CHECK(flat.n == 4);
  CHECK(flat.label == "flat");
}

TEST_CASE("single-class labels leave AUC absent") {
  const std::vector<double> p{0.2, 0.9};
  CHECK_FALSE(compute_metrics(p, std::vector<int>{1, 1}).auc.has_value());
  CHECK_FALSE(auc(p, std::vector<int>{0, 0}).has_value());
}

TEST_CASE("metric input errors") {
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{}, std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS_AS(compute_metrics(std::vector<double>{0.1}, std::vector<int>{1, 0}), std::invalid_argument);
}

TEST_CASE("auc agrees with the pairwise definition") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 499);
    std::vector<double> p(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse grid so ties occur often.
      p[i] = trial % 2 ? std::round(uniform01(rng) * 10.0) / 10.0 : uniform01(rng);
      y[i] = uniform01(rng) < 0.4 ? 1 : 0;
    }
    const auto want = brute_force_auc(p, y);
    const auto got = auc(p, y);
    REQUIRE(got.has_value() == want.has_value());
    if (want) CHECK(std::abs(*got - *want) < 1e-12);

    // Strictly increasing transforms keep the ranking.
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = std::exp(3.0 * p[i]) - 7.0;
    if (want) CHECK(*auc(q, y) == *got);

    // On tie-free inputs ACC is one minus the mean rounding error.
    if (trial % 2 == 0) {
      double miss = 0.0;
      for (std::size_t i = 0; i < n; ++i) miss += std::abs(std::round(p[i]) - y[i]);
      CHECK(compute_metrics(p, y).acc == doctest::Approx(1.0 - miss / static_cast<double>(n)).epsilon(1e-12));
    }
    const auto m = compute_metrics(p, y);
    CHECK(m.rmse >= 0.0);
    CHECK(m.rmse <= 1.0);
    CHECK(m.mae <= m.rmse + 1e-15);
  }
}

TEST_CASE("sparsity sweep shape and overfitting direction") {
  const auto data = sweep_corpus();
  ExperimentConfig config;
  const std::vector<ModelKind> kinds{ModelKind::Irt};
  const std::vector<double> ratios{0.6, 0.9};
  const auto rows = sparsity_sweep(kinds, data.corpus, ratios, 3, config);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].model == "irt");
  CHECK(rows[0].protocol == "sweep");
  CHECK(rows[0].param == "0.6");
  CHECK(rows[1].param == "0.9");
  for (const auto& r : rows) {
    REQUIRE(r.metrics.has_value());
    CHECK(r.metrics->auc.has_value());
  }
  CHECK(rows[0].metrics->n > rows[1].metrics->n);
  CHECK_THROWS_AS(sparsity_sweep(kinds, data.corpus, std::vector<double>{1.0}, 3, config), std::invalid_argument);

  const auto split = split_records(data.corpus.records(), 0.8, 3);
  IrtModel m(data.corpus.student_count(), data.corpus.question_count());
  fit(m, split.train, config.fit);
  CHECK(evaluate(m, split.train).auc.value() >= evaluate(m, split.test).auc.value());
}

TEST_CASE("rare question rows") {
  GenConfig g;
  g.students = 80;
  g.questions = 40;
  g.concepts = 4;
  g.vocab_size = 60;
  g.dim = 4;
  g.mean_records = 30;
  g.rare_questions = 10;
  g.rare_records = 6;
  g.seed = 19;
  const auto data = generate(g);
  const auto plan = rare_question_plan(data.truth, data.corpus, 2);
  const auto split = split_records(data.corpus.records(), 0.8, 5, plan);
  IrtModel m(data.corpus.student_count(), data.corpus.question_count());
  fit(m, split.train, FitConfig{});
  const std::vector<std::size_t> caps{1, 2, 3, 4};
  const auto rows = rare_question_rows(m, split, caps);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].param == "1");
  CHECK(rows[0].protocol == "rare");
  CHECK_FALSE(rows[0].metrics.has_value());  // every planned question keeps two training records
  REQUIRE(rows[1].metrics.has_value());
  REQUIRE(rows[3].metrics.has_value());
  CHECK(rows[3].metrics->n >= rows[1].metrics->n);

  // A dense corpus has no rare questions at all.
  const auto dense = sweep_corpus();
  const auto dense_split = split_records(dense.corpus.records(), 0.8, 5);
  IrtModel dm(dense.corpus.student_count(), dense.corpus.question_count());
  const auto empty_rows = rare_question_rows(dm, dense_split, std::vector<std::size_t>{1});
  REQUIRE(empty_rows.size() == 1);
  CHECK_FALSE(empty_rows[0].metrics.has_value());

  const std::vector<ModelKind> kinds{ModelKind::Irt, ModelKind::Dina};
  const auto both = rare_question_eval(kinds, data.corpus, split, caps, ExperimentConfig{});
  CHECK(both.size() == 8);
  CHECK(both[4].model == "dina");
}

TEST_CASE("result table and json") {
  MetricsReport m;
  m.rmse = 0.5;
  m.mae = 0.25;
  m.auc = 0.75;
  m.acc = 1.0;
  m.n = 4;
  const std::vector<ResultRow> rows{{"dirt", "sweep", "0.8", m}, {"irt", "rare", "1", std::nullopt}};
  std::ostringstream out;
  write_table(out, rows);
  CHECK(out.str() ==
        "model\tprotocol\tparam\trmse\tmae\tauc\tacc\tn\n"
        "dirt\tsweep\t0.8\t0.500000\t0.250000\t0.750000\t1.000000\t4\n"
        "irt\trare\t1\tNA\tNA\tNA\tNA\t0\n");
  const auto doc = nlohmann::json::parse(to_json(rows));
  REQUIRE(doc.size() == 2);
  CHECK(doc[0]["auc"] == 0.75);
  CHECK(doc[0]["n"] == 4);
  CHECK(doc[1]["auc"].is_null());

  dirt::testing::TempDir dir("json");
  write_json(dir / "r.json", rows);
  CHECK(dirt::testing::read_text(dir / "r.json") == to_json(rows));
}
