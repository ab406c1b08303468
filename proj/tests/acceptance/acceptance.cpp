// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "../test_util.hpp"
#include "dirt/checkpoint.hpp"
#include "dirt/classical.hpp"
#include "dirt/commands.hpp"
#include "dirt/dirt_model.hpp"
#include "dirt/errors.hpp"
#include "dirt/evaluation.hpp"
#include "dirt/random.hpp"
#include "dirt/synthetic.hpp"
#include "dirt/training.hpp"

using namespace dirt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

bool close(double got, double want) { return std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)); }

// ---------------------------------------------------------------------------
// Straight-line references.

double ref_sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double ref_irt(double theta, double a, double b) { return 1.0 / (1.0 + std::exp(-1.7 * a * (theta - b))); }

double ref_mirt(const std::vector<double>& theta, const std::vector<double>& a, double d) {
  double z = d;
  for (std::size_t k = 0; k < theta.size(); ++k) z += a[k] * theta[k];
  return 1.0 / (1.0 + std::exp(-z));
}

double ref_dina(const std::vector<int>& mastery, const std::vector<int>& concepts, double slip, double guess) {
  bool all = true;
  for (int c : concepts) all = all && mastery[c] == 1;
  return all ? 1.0 - slip : guess;
}

std::vector<double> ref_attention(const std::vector<double>& w, const Tensor& k) {
  const std::size_t v = k.rows(), d = w.size();
  std::vector<double> e(v);
  double total = 0.0;
  for (std::size_t i = 0; i < v; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < d; ++j) dot += w[j] * k.at(i, j);
    e[i] = std::exp(dot / std::sqrt(static_cast<double>(d)));
    total += e[i];
  }
  std::vector<double> x = w;
  for (std::size_t i = 0; i < v; ++i)
    for (std::size_t j = 0; j < d; ++j) x[j] += e[i] / total * k.at(i, j);
  return x;
}

std::vector<double> ref_lstm(const Tensor& xs, const LstmWeights& w) {
  const std::size_t hidden = w.wh[0].rows(), d = xs.cols();
  std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
  for (std::size_t t = 0; t < xs.rows(); ++t) {
    std::vector<double> next_h(hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
      double pre[4];
      for (int g = 0; g < 4; ++g) {
        pre[g] = w.b[g][j];
        for (std::size_t i = 0; i < d; ++i) pre[g] += xs.at(t, i) * w.wx[g].at(i, j);
        for (std::size_t i = 0; i < hidden; ++i) pre[g] += h[i] * w.wh[g].at(i, j);
      }
      c[j] = ref_sigmoid(pre[1]) * c[j] + ref_sigmoid(pre[0]) * std::tanh(pre[3]);
      next_h[j] = ref_sigmoid(pre[2]) * std::tanh(c[j]);
    }
    h = next_h;
  }
  return h;
}

double ref_loss(double p, int y) { return -(y * std::log(p) + (1 - y) * std::log(1.0 - p)); }

double ref_auc(const std::vector<double>& p, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        pairs += 1.0;
        wins += p[i] > p[j] ? 1.0 : (p[i] == p[j] ? 0.5 : 0.0);
      }
  return wins / pairs;
}

Tensor random_tensor(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (auto& v : t.data()) v = uniform(rng, -1.0, 1.0);
  return t;
}

// ---------------------------------------------------------------------------

Outcome gradient_integrity() {
  const auto start = std::chrono::steady_clock::now();
  const Corpus corpus = dirt::testing::toy_corpus();
  DirtConfig config;
  config.hidden = 6;
  config.seq_len = 6;
  config.seed = 1;
  DirtModel model(corpus, config);
  GradCheckOptions options;
  options.step = 1e-5;
  const auto report = grad_check(
      model.parameters(), [&](Graph& g) { return model.batch_loss(g, corpus.records(), ForwardContext{}); },
      options);
  std::size_t groups = 0, lstm_tensors = 0, scalars = 0;
  for (const auto& p : model.parameters()) {
    if (!p.trainable) continue;
    ++groups;
    scalars += p.value.size();
    if (p.name.rfind("lstm.", 0) == 0) ++lstm_tensors;
  }
  const double secs = seconds_since(start);
  const bool pass = report.max_rel_error < 1e-4 && lstm_tensors == 12 && report.checked == scalars && secs < 30.0;
  return {pass, fmt("max rel error %.2e over %.0f scalars in %.0f groups, %.1f s", report.max_rel_error,
                    static_cast<double>(report.checked), static_cast<double>(groups), secs) +
                    " (worst " + report.worst_parameter + ")"};
}

Outcome range_constraints() {
  GenConfig g;
  g.students = 40;
  g.questions = 250;
  g.concepts = 12;
  g.vocab_size = 300;
  g.dim = 8;
  g.mean_records = 20;
  g.seed = 2;
  const auto data = generate(g);
  std::size_t passes = 0, violations = 0;
  double max_a = 0.0, max_b = 0.0;
  for (std::uint64_t seed = 0; passes < 10000; ++seed) {
    DirtConfig config;
    config.hidden = 8;
    config.seq_len = 12;
    config.seed = seed;
    config.alpha_init_scale = 0.1 + 0.5 * static_cast<double>(seed % 5);
    DirtModel m(data.corpus, config);
    for (std::size_t s = 0; s < data.corpus.student_count() && passes < 10000; ++s) {
      for (double a : m.proficiency(static_cast<int>(s)))
        if (!(a >= 0.0 && a <= 1.0)) ++violations;
      for (std::size_t q = static_cast<std::size_t>(seed) % 10; q < data.corpus.question_count() && passes < 10000; q += 10) {
        const auto d = m.diagnose(static_cast<int>(s), static_cast<int>(q));
        ++passes;
        max_a = std::max(max_a, std::abs(d.a));
        max_b = std::max(max_b, std::abs(d.b));
        if (!(std::abs(d.a) < 4.0 && std::abs(d.b) < 4.0 && d.p > 0.0 && d.p < 1.0)) ++violations;
      }
    }
  }
  return {violations == 0, fmt("%.0f forward passes, %.0f violations, max |a| %.3f, max |b| %.3f",
                               static_cast<double>(passes), static_cast<double>(violations), max_a, max_b)};
}

Outcome formula_oracles() {
  Rng rng(3);
  std::size_t checked = 0, failed = 0;
  auto check = [&](double got, double want) {
    ++checked;
    if (!close(got, want)) ++failed;
  };
  for (int i = 0; i < 100; ++i) {
    const double theta = uniform(rng, -4, 4), a = uniform(rng, -4, 4), b = uniform(rng, -4, 4);
    check(irt_predict(theta, a, b), ref_irt(theta, a, b));

    const std::size_t k = 1 + uniform_index(rng, 5);
    std::vector<double> th(k), ak(k);
    for (std::size_t j = 0; j < k; ++j) {
      th[j] = uniform(rng, -3, 3);
      ak[j] = uniform(rng, -2, 2);
    }
    const double d = uniform(rng, -2, 2);
    check(mirt_predict(th, ak, d), ref_mirt(th, ak, d));

    std::vector<int> mastery(k);
    for (auto& m : mastery) m = uniform01(rng) < 0.6 ? 1 : 0;
    std::vector<int> concepts;
    for (std::size_t j = 0; j < k; ++j)
      if (uniform01(rng) < 0.5 || concepts.empty()) concepts.push_back(static_cast<int>(j));
    const double slip = uniform(rng, 0.01, 0.49), guess = uniform(rng, 0.01, 0.49);
    check(dina_predict(mastery, concepts, slip, guess), ref_dina(mastery, concepts, slip, guess));

    const std::size_t dim = 1 + uniform_index(rng, 6), v = 1 + uniform_index(rng, 4);
    const Tensor kc = random_tensor({v, dim}, rng);
    std::vector<double> w(dim);
    for (auto& x : w) x = uniform(rng, -1, 1);
    const auto got = attention_step(w, kc);
    const auto want = ref_attention(w, kc);
    for (std::size_t j = 0; j < dim; ++j) check(got[j], want[j]);

    const std::size_t hidden = 1 + uniform_index(rng, 5), steps = 1 + uniform_index(rng, 6);
    LstmWeights lw;
    for (int gi = 0; gi < 4; ++gi) {
      lw.wx[gi] = random_tensor({dim, hidden}, rng);
      lw.wh[gi] = random_tensor({hidden, hidden}, rng);
      lw.b[gi] = random_tensor({hidden}, rng);
    }
    const Tensor xs = random_tensor({steps, dim}, rng);
    const auto hg = lstm_forward(xs, lw);
    const auto hw = ref_lstm(xs, lw);
    for (std::size_t j = 0; j < hidden; ++j) check(hg[j], hw[j]);

    const double p = uniform(rng, 0.001, 0.999);
    const int y = uniform01(rng) < 0.5 ? 1 : 0;
    check(response_loss(p, y), ref_loss(p, y));

    const std::size_t n = 2 + uniform_index(rng, 60);
    std::vector<double> preds(n);
    std::vector<int> labels(n);
    for (std::size_t j = 0; j < n; ++j) {
      preds[j] = std::round(uniform01(rng) * 20.0) / 20.0;
      labels[j] = j < 1 ? 1 : (j < 2 ? 0 : (uniform01(rng) < 0.5 ? 1 : 0));
    }
    check(auc(preds, labels).value(), ref_auc(preds, labels));
  }
  return {failed == 0,
          fmt("%.0f comparisons over 100 inputs per formula, %.0f outside 1e-12", static_cast<double>(checked),
              static_cast<double>(failed))};
}

Outcome irt_recovery() {
  const auto start = std::chrono::steady_clock::now();
  GenConfig g;
  g.mode = GeneratorMode::Irt;
  g.students = 200;
  g.questions = 100;
  g.concepts = 10;
  g.vocab_size = 200;
  g.dim = 8;
  g.mean_records = 60;
  g.seed = 4;
  const auto data = generate(g);
  IrtModel m(data.corpus.student_count(), data.corpus.question_count());
  fit(m, data.corpus.records(), FitConfig{});
  std::vector<double> tb, fb, tt, ft;
  for (std::size_t q = 0; q < data.corpus.question_count(); ++q) {
    fb.push_back(m.difficulty(static_cast<int>(q)));
    tb.push_back(data.truth.questions[data.truth.question_index(data.corpus.questions()[q].id)].b);
  }
  for (std::size_t s = 0; s < data.corpus.student_count(); ++s) {
    ft.push_back(m.theta(static_cast<int>(s)));
    tt.push_back(data.truth.theta[data.truth.student_index(data.corpus.students()[s])]);
  }
  const double rb = dirt::testing::pearson(tb, fb), rt = dirt::testing::pearson(tt, ft);
  const double secs = seconds_since(start);
  return {rb >= 0.8 && rt >= 0.8 && secs < 120.0,
          fmt("r(b) %.3f, r(theta) %.3f on %.0f records, %.1f s", rb, rt,
              static_cast<double>(data.corpus.records().size()), secs)};
}

/// DIRT settings for the full-size synthetic corpus.
ExperimentConfig full_size_experiment(std::uint64_t seed) {
  ExperimentConfig e;
  e.dirt.seed = seed;
  e.train.seed = seed;
  e.train.learning_rate = 0.005;
  e.train.max_epochs = 12;
  return e;
}

Outcome learning_signal() {
  const auto start = std::chrono::steady_clock::now();
  GenConfig g;
  g.seed = 7;
  const auto data = generate(g);
  const auto split = split_records(data.corpus.records(), 0.8, 7);
  const ExperimentConfig e = full_size_experiment(7);
  DirtModel dirt_model(data.corpus, e.dirt);
  const auto report = train(dirt_model, split.train, e.train);
  const double dirt_auc = evaluate(dirt_model, split.test).auc.value();
  IrtModel irt(data.corpus.student_count(), data.corpus.question_count());
  fit(irt, split.train, e.fit);
  const double irt_auc = evaluate(irt, split.test).auc.value();
  const bool descent = report.epochs.size() >= 5 && report.epochs[4].train_loss < report.epochs[0].train_loss;
  const double secs = seconds_since(start);
  return {dirt_auc >= 0.75 && dirt_auc >= irt_auc + 0.02 && descent && secs < 900.0,
          fmt("DIRT AUC %.4f, IRT AUC %.4f, %.0f s; epoch-5 loss below epoch-1: ", dirt_auc, irt_auc, secs) +
              (descent ? "yes" : "no")};
}

Outcome rare_robustness() {
  GenConfig g;
  g.seed = 8;
  g.rare_questions = 50;
  g.rare_records = 10;
  const auto data = generate(g);
  const auto plan = rare_question_plan(data.truth, data.corpus, 1);
  const auto split = split_records(data.corpus.records(), 0.8, 8, plan);
  const ExperimentConfig e = full_size_experiment(8);
  const std::vector<std::size_t> caps{1};
  DirtModel dirt_model(data.corpus, e.dirt);
  train(dirt_model, split.train, e.train);
  const auto dirt_rows = rare_question_rows(dirt_model, split, caps);
  IrtModel irt(data.corpus.student_count(), data.corpus.question_count());
  fit(irt, split.train, e.fit);
  DinaModel dina(data.corpus);
  fit(dina, split.train, e.fit);
  const auto irt_rows = rare_question_rows(irt, split, caps);
  const auto dina_rows = rare_question_rows(dina, split, caps);
  if (!dirt_rows[0].metrics || !irt_rows[0].metrics || !dina_rows[0].metrics)
    return {false, "cap=1 subset is empty"};
  const double d = dirt_rows[0].metrics->auc.value(), i = irt_rows[0].metrics->auc.value(),
               n = dina_rows[0].metrics->auc.value();
  return {d > i && d > n, fmt("cap=1 subset of %.0f records: DIRT AUC %.4f, IRT %.4f, DINA %.4f",
                              static_cast<double>(dirt_rows[0].metrics->n), d, i, n)};
}

struct PipelineOutput {
  std::string checkpoint;
  std::string table;
  int status = 0;
};

PipelineOutput run_pipeline(const fs::path& root) {
  GenConfig g;
  g.students = 60;
  g.questions = 120;
  g.concepts = 8;
  g.vocab_size = 150;
  g.dim = 8;
  g.mean_records = 25;
  g.rare_questions = 6;
  g.seed = 5;
  std::ostringstream out, err;
  PipelineOutput result;
  result.status |= cmd_generate(g, root / "data", out, err);
  TrainOptions t;
  t.data = root / "data";
  t.checkpoint = root / "model.ckpt";
  t.seed = 5;
  t.experiment.dirt.hidden = 6;
  t.experiment.dirt.seq_len = 10;
  t.experiment.train.max_epochs = 3;
  t.log_level = LogLevel::Quiet;
  result.status |= cmd_train(t, out, err);
  EvalOptions e;
  e.checkpoint = t.checkpoint;
  e.data = t.data;
  e.ratios = {0.6, 0.8};
  e.compare = {ModelKind::Irt};
  std::ostringstream table;
  result.status |= cmd_eval(e, table, err);
  e.protocol = "rare";
  result.status |= cmd_eval(e, table, err);
  result.table = table.str();
  result.checkpoint = dirt::testing::read_text(t.checkpoint);
  return result;
}

Outcome determinism() {
  dirt::testing::TempDir a("accept-a"), b("accept-b");
  const auto first = run_pipeline(a.path());
  const auto second = run_pipeline(b.path());
  const bool pass = first.status == 0 && second.status == 0 && !first.checkpoint.empty() &&
                    first.checkpoint == second.checkpoint && first.table == second.table;
  return {pass, fmt("checkpoint %.0f bytes", static_cast<double>(first.checkpoint.size())) +
                    "; checkpoints identical: " + std::string(first.checkpoint == second.checkpoint ? "yes" : "no") +
                    "; tables identical: " + (first.table == second.table ? "yes" : "no")};
}

Outcome case_study_export() {
  dirt::testing::TempDir dir("accept-case");
  GenConfig g;
  g.students = 300;
  g.questions = 600;
  g.concepts = 10;
  g.vocab_size = 400;
  g.dim = 20;
  g.mean_records = 120;
  g.focus_concepts = 0;
  g.focus_share = 0.0;
  g.text_mean = 12;
  g.text_sd = 4;
  g.text_max = 30;
  g.seed = 11;
  std::ostringstream out, err;
  if (cmd_generate(g, dir / "data", out, err) != kExitOk) return {false, "generate failed: " + err.str()};

  TrainOptions t;
  t.data = dir / "data";
  t.seed = 11;
  t.log_level = LogLevel::Quiet;
  t.kind = ModelKind::Irt;
  t.checkpoint = dir / "irt.ckpt";
  if (cmd_train(t, out, err) != kExitOk) return {false, "irt training failed: " + err.str()};
  t.kind = ModelKind::Dirt;
  t.checkpoint = dir / "dirt.ckpt";
  t.experiment.dirt.monotone_proficiency = true;
  t.experiment.dirt.hidden = 20;
  t.experiment.dirt.seq_len = 20;
  t.experiment.train.learning_rate = 0.005;
  t.experiment.train.max_epochs = 15;
  if (cmd_train(t, out, err) != kExitOk) return {false, "dirt training failed: " + err.str()};

  const Corpus corpus = load_corpus(dir / "data");
  const GroundTruth truth = load_ground_truth(dir / "data" / kGroundTruthFile);
  auto export_alpha = [&](const fs::path& checkpoint, const std::string& student) {
    DiagnoseOptions d;
    d.checkpoint = checkpoint;
    d.data = dir / "data";
    d.student = student;
    d.out = dir / "diag.json";
    std::ostringstream o, e;
    if (cmd_diagnose(d, o, e) != kExitOk) throw std::runtime_error("diagnose failed: " + e.str());
    return nlohmann::json::parse(dirt::testing::read_text(d.out))["alpha"];
  };

  bool irt_constant = true;
  std::size_t varied = 0;
  std::vector<double> fitted, true_alpha;
  for (const auto& student : corpus.students()) {
    const auto irt_alpha = export_alpha(dir / "irt.ckpt", student);
    const double first = irt_alpha.begin().value();
    for (const auto& [id, value] : irt_alpha.items()) irt_constant = irt_constant && value.get<double>() == first;

    const auto alpha = export_alpha(dir / "dirt.ckpt", student);
    double lo = 1.0, hi = 0.0;
    for (const auto& [id, value] : alpha.items()) {
      const double v = value.get<double>();
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      fitted.push_back(v);
      true_alpha.push_back(truth.alpha[truth.student_index(student)][truth.concept_index(id)]);
    }
    if (hi - lo > 1e-3) ++varied;
  }
  const double r = dirt::testing::pearson(fitted, true_alpha);
  const bool all_varied = varied == corpus.student_count();
  return {irt_constant && all_varied && r >= 0.6,
          std::string("IRT alpha constant: ") + (irt_constant ? "yes" : "no") +
              fmt("; DIRT alpha varies for %.0f of %.0f students; r with true alpha %.3f",
                  static_cast<double>(varied), static_cast<double>(corpus.student_count()), r)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"C1 gradient integrity", gradient_integrity},   {"C2 range constraints", range_constraints},
      {"C3 formula oracles", formula_oracles},         {"C4 IRT parameter recovery", irt_recovery},
      {"C5 DIRT learning signal", learning_signal},    {"C6 rare-question robustness", rare_robustness},
      {"C7 determinism", determinism},                 {"C8 case-study export", case_study_export},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << criteria.size() - failures << "/" << criteria.size()
            << std::endl;
  return failures ? 1 : 0;
}
