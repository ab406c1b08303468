#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "dirt/checkpoint.hpp"
#include "dirt/classical.hpp"
#include "dirt/commands.hpp"
#include "test_util.hpp"

using namespace dirt;
namespace fs = std::filesystem;

namespace {

GenConfig small_gen() {
  GenConfig g;
  g.students = 50;
  g.questions = 60;
  g.concepts = 5;
  g.vocab_size = 80;
  g.dim = 4;
  g.mean_records = 20;
  g.rare_questions = 5;
  g.rare_records = 5;
  g.text_mean = 8;
  g.text_sd = 3;
  g.seed = 3;
  return g;
}

TrainOptions train_options(const fs::path& data, const fs::path& checkpoint, ModelKind kind) {
  TrainOptions t;
  t.kind = kind;
  t.data = data;
  t.checkpoint = checkpoint;
  t.seed = 7;
  t.ratio = 0.8;
  t.experiment.dirt.hidden = 3;
  t.experiment.dirt.seq_len = 6;
  t.experiment.train.max_epochs = 3;
  t.experiment.fit.iterations = 50;
  t.log_level = LogLevel::Quiet;
  return t;
}

std::size_t line_count(const std::string& text) {
  std::size_t n = 0;
  for (char ch : text) n += ch == '\n';
  return n;
}

/// Generated corpus shared by the command tests.
struct Workspace {
  dirt::testing::TempDir dir{"cmds"};
  fs::path data = dir / "data";
  Workspace() {
    std::ostringstream out, err;
    REQUIRE(cmd_generate(small_gen(), data, out, err) == kExitOk);
  }
};

}  // namespace

TEST_CASE("generate writes the corpus and a consistent summary") {
  Workspace w;
  for (const char* name : {CorpusFiles::questions, CorpusFiles::records, CorpusFiles::embeddings, kGroundTruthFile})
    CHECK(fs::exists(w.data / name));
  std::ostringstream out, err;
  const fs::path again = w.dir / "again";
  REQUIRE(cmd_generate(small_gen(), again, out, err) == kExitOk);
  const std::string records = dirt::testing::read_text(w.data / CorpusFiles::records);
  CHECK(out.str().find("records\t" + std::to_string(line_count(records)) + "\n") == 0);
  for (const char* name : {CorpusFiles::questions, CorpusFiles::records, CorpusFiles::embeddings, kGroundTruthFile})
    CHECK(dirt::testing::read_text(w.data / name) == dirt::testing::read_text(again / name));

  GenConfig bad = small_gen();
  bad.students = 0;
  std::ostringstream o2, e2;
  CHECK(cmd_generate(bad, w.dir / "bad", o2, e2) == kExitUsage);
  CHECK(e2.str().find("error:") == 0);
}

TEST_CASE("train writes a reloadable checkpoint with its settings") {
  Workspace w;
  const fs::path ckpt = w.dir / "dirt.ckpt";
  std::ostringstream out, err;
  REQUIRE(cmd_train(train_options(w.data, ckpt, ModelKind::Dirt), out, err) == kExitOk);
  CHECK(err.str().empty());
  CHECK(out.str().empty());  // quiet
  const Checkpoint c = load_checkpoint(ckpt);
  CHECK(c.kind == ModelKind::Dirt);
  CHECK(*c.find_meta("seed") == "7");
  CHECK(*c.find_meta("ratio") == "0.8");
  CHECK(*c.find_meta("split") == "rare");
  const std::string log = dirt::testing::read_text(ckpt.string() + ".log");
  CHECK(log.rfind("epoch\ttrain_loss\tval_loss\tval_auc\n", 0) == 0);
  CHECK(line_count(log) == 1 + std::stoul(*c.find_meta("stopping_epoch")));

  // Reloading and running zero further epochs reproduces the validation loss exactly.
  TrainOptions resume = train_options(w.data, w.dir / "resumed.ckpt", ModelKind::Irt);
  resume.resume = ckpt;
  resume.experiment.train.max_epochs = 0;
  std::ostringstream o2, e2;
  REQUIRE(cmd_train(resume, o2, e2) == kExitOk);
  const Checkpoint r = load_checkpoint(w.dir / "resumed.ckpt");
  CHECK(r.kind == ModelKind::Dirt);
  CHECK(*r.find_meta("best_val_loss") == *c.find_meta("best_val_loss"));
  CHECK(r.tensors == c.tensors);

  // Same inputs, same bytes.
  std::ostringstream o3, e3;
  REQUIRE(cmd_train(train_options(w.data, w.dir / "again.ckpt", ModelKind::Dirt), o3, e3) == kExitOk);
  CHECK(dirt::testing::read_text(ckpt) == dirt::testing::read_text(w.dir / "again.ckpt"));
}

TEST_CASE("train reports missing data as a data error") {
  dirt::testing::TempDir dir("cmds-missing");
  std::ostringstream out, err;
  CHECK(cmd_train(train_options(dir / "nothing", dir / "m.ckpt", ModelKind::Irt), out, err) == kExitData);
}

TEST_CASE("eval protocols produce the expected tables") {
  Workspace w;
  const fs::path ckpt = w.dir / "irt.ckpt";
  std::ostringstream out, err;
  REQUIRE(cmd_train(train_options(w.data, ckpt, ModelKind::Irt), out, err) == kExitOk);

  EvalOptions sweep;
  sweep.checkpoint = ckpt;
  sweep.data = w.data;
  sweep.out = w.dir / "sweep.tsv";
  sweep.compare = {ModelKind::Dina};
  std::ostringstream o1, e1;
  REQUIRE(cmd_eval(sweep, o1, e1) == kExitOk);
  CHECK(line_count(o1.str()) == 1 + 8);
  CHECK(dirt::testing::read_text(w.dir / "sweep.tsv") == o1.str());
  const auto doc = nlohmann::json::parse(dirt::testing::read_text(w.dir / "sweep.json"));
  REQUIRE(doc.size() == 8);
  CHECK(doc[0]["model"] == "irt");
  CHECK(doc[4]["model"] == "dina");
  CHECK(doc[3]["param"] == "0.9");

  std::ostringstream o2, e2;
  REQUIRE(cmd_eval(sweep, o2, e2) == kExitOk);
  CHECK(o2.str() == o1.str());

  EvalOptions rare = sweep;
  rare.protocol = "rare";
  rare.compare.clear();
  rare.out.clear();
  std::ostringstream o3, e3;
  REQUIRE(cmd_eval(rare, o3, e3) == kExitOk);
  CHECK(line_count(o3.str()) == 1 + 4);
  CHECK(o3.str().find("irt\trare\t1\t") != std::string::npos);

  EvalOptions bogus = sweep;
  bogus.protocol = "bogus";
  std::ostringstream o4, e4;
  CHECK(cmd_eval(bogus, o4, e4) == kExitUsage);

  // A checkpoint from another corpus is refused.
  GenConfig other = small_gen();
  other.students = 30;
  std::ostringstream o5, e5, o6, e6;
  REQUIRE(cmd_generate(other, w.dir / "other", o5, e5) == kExitOk);
  EvalOptions mismatch = sweep;
  mismatch.data = w.dir / "other";
  CHECK(cmd_eval(mismatch, o6, e6) == kExitData);
}

TEST_CASE("diagnose exports") {
  Workspace w;
  std::ostringstream out, err;
  const fs::path irt = w.dir / "irt.ckpt", dirt_ckpt = w.dir / "dirt.ckpt", dina = w.dir / "dina.ckpt";
  REQUIRE(cmd_train(train_options(w.data, irt, ModelKind::Irt), out, err) == kExitOk);
  REQUIRE(cmd_train(train_options(w.data, dirt_ckpt, ModelKind::Dirt), out, err) == kExitOk);
  REQUIRE(cmd_train(train_options(w.data, dina, ModelKind::Dina), out, err) == kExitOk);

  DiagnoseOptions d;
  d.checkpoint = irt;
  d.data = w.data;
  d.student = "s0";
  d.out = w.dir / "irt.json";
  std::ostringstream o1, e1;
  REQUIRE(cmd_diagnose(d, o1, e1) == kExitOk);
  const auto irt_doc = nlohmann::json::parse(dirt::testing::read_text(d.out));
  CHECK(irt_doc["alpha_source"] == "theta");
  REQUIRE(irt_doc["alpha"].size() == 5);
  const double first = irt_doc["alpha"].begin().value();
  for (const auto& [id, value] : irt_doc["alpha"].items()) CHECK(value.get<double>() == first);

  d.checkpoint = dirt_ckpt;
  d.out = w.dir / "dirt.json";
  std::ostringstream o2, e2;
  REQUIRE(cmd_diagnose(d, o2, e2) == kExitOk);
  const auto doc = nlohmann::json::parse(dirt::testing::read_text(d.out));
  for (const auto& [id, value] : doc["alpha"].items()) {
    CHECK(value.get<double>() >= 0.0);
    CHECK(value.get<double>() <= 1.0);
  }
  REQUIRE_FALSE(doc["questions"].empty());
  for (const auto& q : doc["questions"])
    CHECK(q["p"].get<double>() == irt_predict(q["theta"].get<double>(), q["a"].get<double>(), q["b"].get<double>()));

  // TSV to the stream, restricted to named questions.
  d.out.clear();
  d.questions = {"q1", "q2"};
  std::ostringstream o3, e3;
  REQUIRE(cmd_diagnose(d, o3, e3) == kExitOk);
  CHECK(line_count(o3.str()) == 3);
  CHECK(o3.str().rfind("student\tquestion\ttheta\ta\tb\tp\talpha\n", 0) == 0);

  d.questions = {"nope"};
  std::ostringstream o4, e4;
  CHECK(cmd_diagnose(d, o4, e4) == kExitData);

  d.questions.clear();
  d.checkpoint = dina;
  std::ostringstream o5, e5;
  CHECK(cmd_diagnose(d, o5, e5) == kExitUsage);
  CHECK(e5.str().find("dirt") != std::string::npos);
}
