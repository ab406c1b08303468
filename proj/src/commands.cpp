#include "dirt/commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dirt/checkpoint.hpp"
#include "dirt/classical.hpp"
#include "dirt/corpus.hpp"
#include "dirt/dirt_model.hpp"
#include "dirt/errors.hpp"
#include "dirt/evaluation.hpp"

namespace dirt {

namespace fs = std::filesystem;

LogLevel log_level_from_env() {
  const char* v = std::getenv("DIRT_LOG_LEVEL");
  if (!v) return LogLevel::Info;
  const std::string s(v);
  if (s == "quiet" || s == "0") return LogLevel::Quiet;
  if (s == "debug" || s == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

namespace {

/// Maps the library's exception families onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::optional<GroundTruth> maybe_truth(const fs::path& data) {
  const fs::path path = data / kGroundTruthFile;
  if (!fs::exists(path)) return std::nullopt;
  return load_ground_truth(path);
}

struct SplitSettings {
  std::uint64_t seed = 0;
  double ratio = 0.8;
  std::size_t rare_quota = 1;
};

/// The split used for training: rare-flagged questions keep `rare_quota`
/// training records when the corpus ships a ground truth listing them.
DatasetSplit make_split(const Corpus& corpus, const fs::path& data, const SplitSettings& s, std::string* kind) {
  if (auto truth = maybe_truth(data)) {
    RareQuestionPlan plan = rare_question_plan(*truth, corpus, s.rare_quota);
    if (!plan.questions.empty()) {
      if (kind) *kind = "rare";
      return split_records(corpus.records(), s.ratio, s.seed, plan);
    }
  }
  if (kind) *kind = "plain";
  return split_records(corpus.records(), s.ratio, s.seed);
}

std::uint64_t meta_u64(const Checkpoint& c, const char* key, std::uint64_t fallback) {
  const std::string* v = c.find_meta(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const auto n = std::stoull(*v, &used);
    if (used != v->size()) throw std::invalid_argument(*v);
    return n;
  } catch (const std::exception&) {
    throw DataError("checkpoint: bad value for " + std::string(key) + ": '" + *v + "'");
  }
}

double meta_double(const Checkpoint& c, const char* key, double fallback) {
  const std::string* v = c.find_meta(key);
  return v ? parse_exact(*v) : fallback;
}

SplitSettings split_from(const Checkpoint& c) {
  SplitSettings s;
  s.seed = meta_u64(c, "seed", s.seed);
  s.ratio = meta_double(c, "ratio", s.ratio);
  s.rare_quota = meta_u64(c, "rare_quota", s.rare_quota);
  return s;
}

void put_experiment(Checkpoint& c, const ExperimentConfig& e) {
  c.set_meta("epochs", std::to_string(e.train.max_epochs));
  c.set_meta("batch_size", std::to_string(e.train.batch_size));
  c.set_meta("lr", format_exact(e.train.learning_rate));
  c.set_meta("beta1", format_exact(e.train.beta1));
  c.set_meta("beta2", format_exact(e.train.beta2));
  c.set_meta("epsilon", format_exact(e.train.epsilon));
  c.set_meta("dropout", format_exact(e.train.dropout));
  c.set_meta("patience", std::to_string(e.train.patience));
  c.set_meta("validation_fraction", format_exact(e.train.validation_fraction));
  c.set_meta("train_seed", std::to_string(e.train.seed));
  c.set_meta("fit_iterations", std::to_string(e.fit.iterations));
  c.set_meta("fit_lr", format_exact(e.fit.learning_rate));
  c.set_meta("classical_full_batch", e.classical_full_batch ? "1" : "0");
}

ExperimentConfig experiment_from(const Checkpoint& c) {
  ExperimentConfig e;
  e.dirt = get_dirt_config(c);
  e.train.max_epochs = meta_u64(c, "epochs", e.train.max_epochs);
  e.train.batch_size = meta_u64(c, "batch_size", e.train.batch_size);
  e.train.learning_rate = meta_double(c, "lr", e.train.learning_rate);
  e.train.beta1 = meta_double(c, "beta1", e.train.beta1);
  e.train.beta2 = meta_double(c, "beta2", e.train.beta2);
  e.train.epsilon = meta_double(c, "epsilon", e.train.epsilon);
  e.train.dropout = meta_double(c, "dropout", e.train.dropout);
  e.train.patience = meta_u64(c, "patience", e.train.patience);
  e.train.validation_fraction = meta_double(c, "validation_fraction", e.train.validation_fraction);
  e.train.seed = meta_u64(c, "train_seed", e.train.seed);
  e.fit.iterations = meta_u64(c, "fit_iterations", e.fit.iterations);
  e.fit.learning_rate = meta_double(c, "fit_lr", e.fit.learning_rate);
  e.classical_full_batch = c.meta_or("classical_full_batch", "1") != "0";
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_generate(const GenConfig& config, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const GeneratedData data = generate(config);
    write_generated(data, out_dir);
    const CorpusStats s = corpus_stats(data.corpus);
    out << "records\t" << s.records << '\n'
        << "students\t" << s.students << '\n'
        << "questions\t" << s.questions << '\n'
        << "concepts\t" << s.concepts << '\n'
        << "text_within_30\t" << fixed(s.text_within_limit) << '\n'
        << "questions_per_student\t" << fixed(s.questions_per_student, 2) << '\n'
        << "concepts_per_question\t" << fixed(s.concepts_per_question, 2) << '\n';
    return kExitOk;
  });
}

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const Corpus corpus = load_corpus(options.data);
    SplitSettings split_settings{options.seed, options.ratio, options.rare_quota};
    ExperimentConfig experiment = options.experiment;
    std::unique_ptr<Model> model;
    ModelKind kind = options.kind;
    if (options.resume) {
      const Checkpoint previous = load_checkpoint(*options.resume);
      split_settings = split_from(previous);
      kind = previous.kind;
      experiment.dirt = get_dirt_config(previous);
      experiment.train.seed = meta_u64(previous, "train_seed", split_settings.seed);
      model = restore_model(previous, corpus);
    } else {
      experiment.dirt.seed = options.seed;
      experiment.train.seed = options.seed;
      model = make_model(kind, corpus, experiment);
    }
    std::string split_kind;
    const DatasetSplit split = make_split(corpus, options.data, split_settings, &split_kind);

    const fs::path log_path = options.log_file ? *options.log_file : fs::path(options.checkpoint.string() + ".log");
    std::ofstream log = open_out(log_path);
    log << "epoch\ttrain_loss\tval_loss\tval_auc\n";
    const bool verbose = options.log_level != LogLevel::Quiet;
    if (verbose) out << "epoch\ttrain_loss\tval_loss\tval_auc\n";
    const TrainReport report = fit_model(*model, split.train, experiment, [&](const EpochStats& e) {
      write_epoch_line(log, e);
      log.flush();
      if (verbose) {
        write_epoch_line(out, e);
        out.flush();
      }
    });

    Checkpoint checkpoint = make_checkpoint(*model, corpus);
    checkpoint.set_meta("seed", std::to_string(split_settings.seed));
    checkpoint.set_meta("ratio", format_exact(split_settings.ratio));
    checkpoint.set_meta("rare_quota", std::to_string(split_settings.rare_quota));
    checkpoint.set_meta("split", split_kind);
    put_experiment(checkpoint, experiment);
    checkpoint.set_meta("best_epoch", std::to_string(report.best_epoch));
    checkpoint.set_meta("stopping_epoch", std::to_string(report.stopping_epoch));
    checkpoint.set_meta("best_val_loss", format_exact(report.best_val_loss));
    if (options.checkpoint.has_parent_path()) fs::create_directories(options.checkpoint.parent_path());
    save_checkpoint(checkpoint, options.checkpoint);
    if (verbose)
      out << "model " << to_string(kind) << " train " << split.train.size() << " test " << split.test.size()
          << " best_epoch " << report.best_epoch << " val_loss " << format_exact(report.best_val_loss) << '\n';
    if (options.log_level == LogLevel::Debug) out << "checkpoint " << options.checkpoint.string() << '\n';
    return kExitOk;
  });
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    if (options.protocol != "sweep" && options.protocol != "rare")
      throw std::invalid_argument("unknown protocol '" + options.protocol + "' (expected sweep or rare)");
    const Checkpoint checkpoint = load_checkpoint(options.checkpoint);
    const Corpus corpus = load_corpus(options.data);
    // Restoring validates the checkpoint against this corpus for both protocols.
    const auto model = restore_model(checkpoint, corpus);
    const ExperimentConfig experiment = experiment_from(checkpoint);
    const SplitSettings settings = split_from(checkpoint);

    std::vector<ResultRow> rows;
    if (options.protocol == "sweep") {
      std::vector<ModelKind> kinds{checkpoint.kind};
      for (ModelKind k : options.compare)
        if (k != checkpoint.kind) kinds.push_back(k);
      rows = sparsity_sweep(kinds, corpus, options.ratios, settings.seed, experiment);
    } else {
      for (std::size_t cap : options.caps)
        if (cap == 0) throw std::invalid_argument("rare caps must be at least 1");
      const DatasetSplit split = make_split(corpus, options.data, settings, nullptr);
      rows = rare_question_rows(*model, split, options.caps);
      std::vector<ModelKind> others;
      for (ModelKind k : options.compare)
        if (k != checkpoint.kind) others.push_back(k);
      const auto more = rare_question_eval(others, corpus, split, options.caps, experiment);
      rows.insert(rows.end(), more.begin(), more.end());
    }

    write_table(out, rows);
    if (!options.out.empty()) {
      fs::path table = options.out;
      fs::path json = options.out;
      if (table.extension() == ".json") table.replace_extension(".tsv");
      else json.replace_extension(".json");
      auto t = open_out(table);
      write_table(t, rows);
      write_json(json, rows);
    }
    return kExitOk;
  });
}

int cmd_diagnose(const DiagnoseOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() -> int {
    const Checkpoint checkpoint = load_checkpoint(options.checkpoint);
    if (checkpoint.kind == ModelKind::Dina)
      throw std::invalid_argument(
          "diagnose exports proficiencies for dirt and dirtna checkpoints; irt exports its scalar trait "
          "replicated per concept and mirt its trait vector; dina has no continuous proficiency to export");
    const Corpus corpus = load_corpus(options.data);
    const auto model = restore_model(checkpoint, corpus);
    const int student = corpus.student_index(options.student);
    if (student < 0) throw std::out_of_range("unknown student '" + options.student + "'");

    std::vector<int> questions;
    if (options.questions.empty()) {
      std::vector<char> seen(corpus.question_count());
      for (const auto& r : corpus.records())
        if (r.student == student && !seen[r.question]) {
          seen[r.question] = 1;
          questions.push_back(r.question);
        }
    } else {
      for (const auto& id : options.questions) {
        const int q = corpus.question_index(id);
        if (q < 0) throw std::out_of_range("unknown question '" + id + "'");
        questions.push_back(q);
      }
    }

    struct Row {
      int question;
      double theta, p;
      std::optional<double> a, b;
    };
    std::vector<Row> rows;
    std::vector<double> alpha;
    std::string alpha_source;
    std::vector<ResponseRecord> probes;
    for (int q : questions) probes.push_back({student, q, 0});

    if (const auto* dirt = dynamic_cast<const DirtModel*>(model.get())) {
      alpha = dirt->proficiency(student);
      alpha_source = "proficiency";
      const auto results = dirt->diagnose(probes);
      for (std::size_t i = 0; i < probes.size(); ++i)
        rows.push_back({probes[i].question, results[i].theta, results[i].p, results[i].a, results[i].b});
    } else if (const auto* irt = dynamic_cast<const IrtModel*>(model.get())) {
      alpha.assign(corpus.concept_count(), irt->theta(student));
      alpha_source = "theta";
      for (int q : questions) {
        const double a = irt->discrimination(q), b = irt->difficulty(q), t = irt->theta(student);
        rows.push_back({q, t, irt_predict(t, a, b), a, b});
      }
    } else if (const auto* mirt = dynamic_cast<const MirtModel*>(model.get())) {
      const auto theta = mirt->theta(student);
      alpha.assign(theta.begin(), theta.end());
      alpha_source = "mirt-theta";
      const auto p = mirt->predict(probes);
      for (std::size_t i = 0; i < questions.size(); ++i) {
        const auto a = mirt->discrimination(questions[i]);
        double z = 0.0;
        for (int c : corpus.questions()[questions[i]].concepts) z += a[c] * theta[c];
        rows.push_back({questions[i], z, p[i], std::nullopt, std::nullopt});
      }
    }

    std::ostringstream text;
    if (options.out.extension() == ".json") {
      nlohmann::ordered_json doc;
      doc["model"] = std::string(to_string(checkpoint.kind));
      doc["student"] = options.student;
      doc["seen"] = model->student_seen(student);
      doc["alpha_source"] = alpha_source;
      nlohmann::ordered_json a = nlohmann::ordered_json::object();
      for (std::size_t c = 0; c < alpha.size(); ++c) a[corpus.concepts()[c].id] = alpha[c];
      doc["alpha"] = a;
      doc["questions"] = nlohmann::ordered_json::array();
      for (const auto& r : rows) {
        nlohmann::ordered_json item;
        item["question"] = corpus.questions()[r.question].id;
        item["theta"] = r.theta;
        item["a"] = r.a ? nlohmann::ordered_json(*r.a) : nlohmann::ordered_json(nullptr);
        item["b"] = r.b ? nlohmann::ordered_json(*r.b) : nlohmann::ordered_json(nullptr);
        item["p"] = r.p;
        doc["questions"].push_back(item);
      }
      text << doc.dump(2) << '\n';
    } else {
      std::string alpha_field;
      for (std::size_t c = 0; c < alpha.size(); ++c)
        alpha_field += (c ? "," : "") + corpus.concepts()[c].id + ":" + g17(alpha[c]);
      text << "student\tquestion\ttheta\ta\tb\tp\talpha\n";
      for (const auto& r : rows)
        text << options.student << '\t' << corpus.questions()[r.question].id << '\t' << g17(r.theta) << '\t'
             << (r.a ? g17(*r.a) : "NA") << '\t' << (r.b ? g17(*r.b) : "NA") << '\t' << g17(r.p) << '\t'
             << alpha_field << '\n';
    }
    if (options.out.empty()) {
      out << text.str();
    } else {
      auto file = open_out(options.out);
      file << text.str();
    }
    return kExitOk;
  });
}

}  // namespace dirt
