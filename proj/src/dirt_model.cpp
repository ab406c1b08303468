#include "dirt/dirt_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dirt/classical.hpp"
#include "dirt/errors.hpp"
#include "dirt/optim.hpp"

namespace dirt {

namespace {

constexpr const char* kGates[4] = {"i", "f", "o", "c"};

// Chunk sizes for inference; they bound graph memory, not results.
constexpr std::size_t kQuestionChunk = 128;
constexpr std::size_t kRecordChunk = 4096;

struct DnnVars {
  Var w1, b1, w2, b2, w3, b3;
  Activation activation = Activation::Tanh;
};

struct LstmVars {
  Var wx[4], wh[4], b[4];
};

/// Attention pairs: every word row paired with every concept row of its question.
struct Pairs {
  std::vector<int> word;
  std::vector<int> concept_row;
};

Var maybe_dropout(Var x, const ForwardContext& context) {
  if (context.mode != Mode::Train || context.dropout <= 0.0) return x;
  if (context.rng == nullptr) throw std::invalid_argument("dropout in training mode needs a random source");
  return ops::dropout(x, context.dropout, Mode::Train, *context.rng);
}

Var activate(Var x, Activation activation) { return activation == Activation::Tanh ? ops::tanh(x) : x; }

/// x [rows x in] -> [rows].
Var run_dnn(const DnnVars& net, Var x, const ForwardContext& context) {
  const std::size_t rows = x.value().rows();
  Var h1 = maybe_dropout(activate(ops::add_bias(ops::matmul(x, net.w1), net.b1), net.activation), context);
  Var h2 = maybe_dropout(activate(ops::add_bias(ops::matmul(h1, net.w2), net.b2), net.activation), context);
  return ops::reshape(ops::add_bias(ops::matmul(h2, net.w3), net.b3), {rows});
}

/// Maps a real score into (-4, 4).
Var bounded(Var z, bool literal = false) {
  if (literal) return ops::scale(ops::sigmoid(ops::shift(z, -0.5)), 8.0);
  return ops::scale(ops::shift(ops::sigmoid(z), -0.5), 8.0);
}

/// words [T x d], concepts [C x d] -> [T x d].
Var attend(Var words, Var concepts, const Pairs& pairs) {
  const std::size_t rows = words.value().rows();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(words.value().cols()));
  Var pw = ops::gather_rows(words, pairs.word);
  Var pk = ops::gather_rows(concepts, pairs.concept_row);
  Var weights = ops::segment_softmax(ops::scale(ops::row_dot(pw, pk), inv_sqrt_d), pairs.word, rows);
  return ops::add(ops::segment_sum(ops::row_scale(pk, weights), pairs.word, rows), words);
}

/// inputs [steps*units x d], step-major. Returns h_N [units x hidden].
Var run_lstm(const LstmVars& lstm, Var inputs, std::size_t steps, std::size_t units) {
  Graph& graph = *inputs.graph();
  const std::size_t hidden = lstm.wh[0].value().rows();
  Var wx = ops::concat_cols(lstm.wx);
  Var wh = ops::concat_cols(lstm.wh);
  Var bias = ops::concat(lstm.b);
  Var projected = ops::matmul(inputs, wx);
  Var h = graph.constant(Tensor({units, hidden}));
  Var c = graph.constant(Tensor({units, hidden}));
  std::vector<int> rows(units);
  for (std::size_t t = 0; t < steps; ++t) {
    std::iota(rows.begin(), rows.end(), static_cast<int>(t * units));
    Var gates = ops::add_bias(ops::add(ops::gather_rows(projected, rows), ops::matmul(h, wh)), bias);
    Var in = ops::sigmoid(ops::slice_cols(gates, 0, hidden));
    Var forget = ops::sigmoid(ops::slice_cols(gates, hidden, hidden));
    Var out = ops::sigmoid(ops::slice_cols(gates, 2 * hidden, hidden));
    Var cell = ops::tanh(ops::slice_cols(gates, 3 * hidden, hidden));
    c = ops::add(ops::mul(forget, c), ops::mul(in, cell));
    h = ops::mul(out, ops::tanh(c));
  }
  return h;
}

DnnVars dnn_constants(Graph& graph, const DnnWeights& w) {
  return {graph.constant_ref(w.w1), graph.constant_ref(w.b1), graph.constant_ref(w.w2),
          graph.constant_ref(w.b2), graph.constant_ref(w.w3), graph.constant_ref(w.b3), w.activation};
}

LstmVars lstm_constants(Graph& graph, const LstmWeights& w) {
  LstmVars v;
  for (int g = 0; g < 4; ++g) {
    v.wx[g] = graph.constant_ref(w.wx[g]);
    v.wh[g] = graph.constant_ref(w.wh[g]);
    v.b[g] = graph.constant_ref(w.b[g]);
  }
  return v;
}

Pairs all_pairs(std::size_t words, std::size_t concepts) {
  Pairs p;
  for (std::size_t t = 0; t < words; ++t)
    for (std::size_t i = 0; i < concepts; ++i) {
      p.word.push_back(static_cast<int>(t));
      p.concept_row.push_back(static_cast<int>(i));
    }
  return p;
}

void require_rows(const Tensor& concepts, const char* who) {
  if (concepts.rank() != 2 || concepts.rows() == 0) throw ShapeError(std::string(who) + ": need a non-empty concept matrix");
}

std::string dnn_name(const std::string& prefix, const char* part) { return prefix + "." + part; }

void add_dnn(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t width, Rng& rng) {
  params.add(dnn_name(prefix, "w1"), glorot_uniform({in, width}, rng));
  params.add(dnn_name(prefix, "b1"), glorot_uniform({width}, rng));
  params.add(dnn_name(prefix, "w2"), glorot_uniform({width, width}, rng));
  params.add(dnn_name(prefix, "b2"), glorot_uniform({width}, rng));
  params.add(dnn_name(prefix, "w3"), glorot_uniform({width, 1}, rng));
  params.add(dnn_name(prefix, "b3"), glorot_uniform({1}, rng));
}

DnnVars dnn_leaves(Graph& graph, const ParameterSet& params, const std::string& prefix, Activation activation,
                   bool differentiable, Var (*leaf)(Graph&, const Parameter&, bool)) {
  auto get = [&](const char* part) { return leaf(graph, params.get(dnn_name(prefix, part)), differentiable); };
  return {get("w1"), get("b1"), get("w2"), get("b2"), get("w3"), get("b3"), activation};
}

DnnWeights dnn_copy(const ParameterSet& params, const std::string& prefix, Activation activation) {
  auto get = [&](const char* part) { return params.get(dnn_name(prefix, part)).value; };
  return {get("w1"), get("b1"), get("w2"), get("b2"), get("w3"), get("b3"), activation};
}

constexpr const char* kMonotoneParameters[] = {
    "concept_embedding", "theta_net.w1", "theta_net.w2", "theta_net.w3", "disc_net.w1", "disc_net.b1",
    "disc_net.w2",       "disc_net.b2",  "disc_net.w3",  "disc_net.b3"};

std::string lstm_name(const char* kind, int gate) {
  return std::string("lstm.") + kind + (std::string(kind) == "b" ? "_" : "") + kGates[gate];
}

}  // namespace

// ---------------------------------------------------------------------------
// Single-question forms, built from the same graph pieces as the model.

Tensor embed_concepts(const Question& question, const Tensor& concept_embedding) {
  if (question.concepts.empty()) throw std::invalid_argument("embed_concepts: question has no concepts");
  const std::size_t d = concept_embedding.cols();
  Tensor out({question.concepts.size(), d});
  for (std::size_t i = 0; i < question.concepts.size(); ++i) {
    const int c = question.concepts[i];
    if (c < 0 || static_cast<std::size_t>(c) >= concept_embedding.rows())
      throw std::out_of_range("embed_concepts: concept index " + std::to_string(c) + " out of range");
    std::copy_n(concept_embedding.ptr() + static_cast<std::size_t>(c) * d, d, out.ptr() + i * d);
  }
  return out;
}

double diagnose_latent_trait(std::span<const double> alpha, const Tensor& concepts, const DnnWeights& net) {
  require_rows(concepts, "diagnose_latent_trait");
  if (alpha.size() != concepts.rows()) throw ShapeError("diagnose_latent_trait: one alpha per concept row required");
  Graph graph;
  Var k = graph.constant_ref(concepts);
  Var w = graph.constant(Tensor({alpha.size()}, std::vector<double>(alpha.begin(), alpha.end())));
  const std::vector<int> one(alpha.size(), 0);
  Var combined = ops::segment_sum(ops::row_scale(k, w), one, 1);
  return run_dnn(dnn_constants(graph, net), combined, {}).item();
}

double diagnose_discrimination(const Tensor& concepts, const DnnWeights& net, bool literal) {
  require_rows(concepts, "diagnose_discrimination");
  Graph graph;
  const std::vector<int> one(concepts.rows(), 0);
  Var combined = ops::segment_sum(graph.constant_ref(concepts), one, 1);
  return bounded(run_dnn(dnn_constants(graph, net), combined, {}), literal).item();
}

std::vector<double> attention_weights(std::span<const double> w, const Tensor& concepts) {
  require_rows(concepts, "attention_weights");
  if (w.size() != concepts.cols()) throw ShapeError("attention_weights: word and concept dimensions differ");
  Graph graph;
  Var word = graph.constant(Tensor({1, w.size()}, std::vector<double>(w.begin(), w.end())));
  const Pairs pairs = all_pairs(1, concepts.rows());
  Var pw = ops::gather_rows(word, pairs.word);
  Var pk = ops::gather_rows(graph.constant_ref(concepts), pairs.concept_row);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(w.size()));
  Var weights = ops::segment_softmax(ops::scale(ops::row_dot(pw, pk), inv_sqrt_d), pairs.word, 1);
  const auto v = weights.value().data();
  return {v.begin(), v.end()};
}

std::vector<double> attention_step(std::span<const double> w, const Tensor& concepts) {
  require_rows(concepts, "attention_step");
  if (w.size() != concepts.cols()) throw ShapeError("attention_step: word and concept dimensions differ");
  Graph graph;
  Var word = graph.constant(Tensor({1, w.size()}, std::vector<double>(w.begin(), w.end())));
  Var x = attend(word, graph.constant_ref(concepts), all_pairs(1, concepts.rows()));
  const auto v = x.value().data();
  return {v.begin(), v.end()};
}

std::vector<double> lstm_forward(const Tensor& inputs, const LstmWeights& lstm) {
  if (inputs.rank() != 2) throw ShapeError("lstm_forward: inputs must be a [steps x d0] matrix");
  Graph graph;
  Var h = run_lstm(lstm_constants(graph, lstm), graph.constant_ref(inputs), inputs.rows(), 1);
  const auto v = h.value().data();
  return {v.begin(), v.end()};
}

double diagnose_difficulty(const Question& question, const EmbeddingTable& embeddings, const Tensor& concepts,
                           const LstmWeights& lstm, std::size_t steps) {
  require_rows(concepts, "diagnose_difficulty");
  if (steps == 0) throw std::invalid_argument("diagnose_difficulty: need at least one step");
  if (embeddings.dim() != concepts.cols()) throw ShapeError("diagnose_difficulty: word and concept dimensions differ");
  const auto tokens = prepare_tokens(question, steps);
  const std::size_t d = embeddings.dim();
  Tensor words({steps, d});
  for (std::size_t t = 0; t < steps; ++t) {
    const auto v = embeddings.vector(tokens[t]);
    std::copy(v.begin(), v.end(), words.ptr() + t * d);
  }
  Graph graph;
  Var x = attend(graph.constant_ref(words), graph.constant_ref(concepts), all_pairs(steps, concepts.rows()));
  Var h = run_lstm(lstm_constants(graph, lstm), x, steps, 1);
  return bounded(ops::row_mean(h)).item();
}

double response_loss(double probability, int label) {
  const double q = std::clamp(probability, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label ? -std::log(q) : -std::log(1.0 - q);
}

// ---------------------------------------------------------------------------
// DirtModel

DirtModel::DirtModel(const Corpus& corpus, const DirtConfig& config, ModelKind kind)
    : Model(corpus.student_count()),
      kind_(kind),
      config_(config),
      dim_(corpus.embeddings().dim()),
      concepts_(corpus.concept_count()),
      students_(corpus.student_count()) {
  if (kind != ModelKind::Dirt && kind != ModelKind::DirtNa)
    throw std::invalid_argument("DirtModel: kind must be dirt or dirtna");
  if (dim_ == 0) throw DataError("DIRT needs word embeddings to fix the concept dimension");
  if (concepts_ == 0 || students_ == 0 || corpus.question_count() == 0)
    throw DataError("DIRT needs at least one student, question and concept");
  if (config.hidden == 0 || config.seq_len == 0) throw std::invalid_argument("DIRT: hidden size and steps must be positive");

  const auto& table = corpus.embeddings();
  for (const auto& q : corpus.questions()) {
    question_concepts_.push_back(q.concepts);
    std::vector<int> rows;
    std::size_t length = 0;
    for (long token : prepare_tokens(q, config.seq_len)) {
      rows.push_back(table.row_of(token));
      if (token != kPaddingToken) ++length;
    }
    question_words_.push_back(std::move(rows));
    question_lengths_.push_back(length);
  }
  frozen_words_ = table.matrix();

  const std::size_t width = config.dnn_width ? config.dnn_width : dim_;
  Rng rng(config.seed);
  Tensor alpha({students_, concepts_});
  for (auto& v : alpha.data()) v = config.alpha_init_scale * standard_normal(rng);
  params_.add("alpha", std::move(alpha));
  params_.add("concept_embedding", glorot_uniform({concepts_, dim_}, rng));
  add_dnn(params_, "theta_net", dim_, width, rng);
  add_dnn(params_, "disc_net", dim_, width, rng);
  if (kind == ModelKind::Dirt) {
    for (int g = 0; g < 4; ++g) {
      params_.add(lstm_name("w_x", g), glorot_uniform({dim_, config.hidden}, rng));
      params_.add(lstm_name("w_h", g), glorot_uniform({config.hidden, config.hidden}, rng));
      params_.add(lstm_name("b", g), glorot_uniform({config.hidden}, rng));
    }
  } else {
    add_dnn(params_, "text_net", dim_, width, rng);
  }
  if (config.train_embeddings) params_.add("word_embedding", frozen_words_);
  if (config.monotone_proficiency)
    for (const char* name : kMonotoneParameters)
      for (auto& v : params_.get(name).value.data()) v = std::abs(v);
}

Var DirtModel::theta_path(Graph& graph, std::span<const ResponseRecord> records, const ForwardContext& context,
                          bool differentiable) const {
  std::vector<int> rows, segment, flat;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.student < 0 || static_cast<std::size_t>(rec.student) >= students_ || rec.question < 0 ||
        static_cast<std::size_t>(rec.question) >= question_concepts_.size())
      throw std::out_of_range("DIRT: record refers to an unknown student or question");
    for (int c : question_concepts_[rec.question]) {
      rows.push_back(c);
      segment.push_back(static_cast<int>(r));
      flat.push_back(static_cast<int>(static_cast<std::size_t>(rec.student) * concepts_ + static_cast<std::size_t>(c)));
    }
  }
  Var wk = leaf(graph, params_.get("concept_embedding"), differentiable);
  Var alpha = ops::sigmoid(ops::gather_flat(leaf(graph, params_.get("alpha"), differentiable), flat));
  Var combined = ops::segment_sum(ops::row_scale(ops::gather_rows(wk, rows), alpha), segment, records.size());
  return run_dnn(dnn_leaves(graph, params_, "theta_net", config_.activation, differentiable, &Model::leaf), combined,
                 context);
}

std::pair<Var, Var> DirtModel::question_path(Graph& graph, std::span<const int> questions,
                                             const ForwardContext& context, bool differentiable) const {
  const std::size_t units = questions.size();
  std::vector<int> concept_rows, concept_segment, offset{0};
  for (std::size_t u = 0; u < units; ++u) {
    for (int c : question_concepts_[questions[u]]) {
      concept_rows.push_back(c);
      concept_segment.push_back(static_cast<int>(u));
    }
    offset.push_back(static_cast<int>(concept_rows.size()));
  }
  Var wk = leaf(graph, params_.get("concept_embedding"), differentiable);
  Var k = ops::gather_rows(wk, concept_rows);

  Var a = bounded(run_dnn(dnn_leaves(graph, params_, "disc_net", config_.activation, differentiable, &Model::leaf),
                          ops::segment_sum(k, concept_segment, units), context),
                  config_.literal_discrimination);

  const Parameter* trained_words = params_.find("word_embedding");
  Var table = trained_words ? leaf(graph, *trained_words, differentiable) : graph.constant_ref(frozen_words_);
  const std::size_t steps = config_.seq_len;

  if (kind_ == ModelKind::DirtNa) {
    std::vector<int> rows, segment;
    std::vector<double> weight(units, 0.0);
    for (std::size_t u = 0; u < units; ++u) {
      const std::size_t length = question_lengths_[questions[u]];
      for (std::size_t t = 0; t < length; ++t) {
        rows.push_back(question_words_[questions[u]][t]);
        segment.push_back(static_cast<int>(u));
      }
      if (length) weight[u] = 1.0 / static_cast<double>(length);
    }
    Var mean_words = rows.empty() ? graph.constant(Tensor({units, dim_}))
                                  : ops::row_scale(ops::segment_sum(ops::gather_rows(table, rows), segment, units),
                                                   graph.constant(Tensor({units}, std::move(weight))));
    Var b = bounded(run_dnn(dnn_leaves(graph, params_, "text_net", config_.activation, differentiable, &Model::leaf),
                            mean_words, context));
    return {a, b};
  }

  std::vector<int> word_rows(steps * units);
  Pairs pairs;
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t u = 0; u < units; ++u) {
      const int row = static_cast<int>(t * units + u);
      word_rows[row] = question_words_[questions[u]][t];
      for (int i = offset[u]; i < offset[u + 1]; ++i) {
        pairs.word.push_back(row);
        pairs.concept_row.push_back(i);
      }
    }
  Var words = ops::gather_rows(table, word_rows);
  Var x = maybe_dropout(attend(words, k, pairs), context);
  LstmVars lstm;
  for (int g = 0; g < 4; ++g) {
    lstm.wx[g] = leaf(graph, params_.get(lstm_name("w_x", g)), differentiable);
    lstm.wh[g] = leaf(graph, params_.get(lstm_name("w_h", g)), differentiable);
    lstm.b[g] = leaf(graph, params_.get(lstm_name("b", g)), differentiable);
  }
  Var b = bounded(ops::row_mean(run_lstm(lstm, x, steps, units)));
  return {a, b};
}

Var DirtModel::batch_loss(Graph& graph, std::span<const ResponseRecord> batch, const ForwardContext& context) {
  if (batch.empty()) throw std::invalid_argument("DIRT: empty batch");
  std::vector<int> unique, position(question_concepts_.size(), -1), record_position(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const int q = batch[r].question;
    if (q < 0 || static_cast<std::size_t>(q) >= question_concepts_.size())
      throw std::out_of_range("DIRT: record refers to an unknown question");
    if (position[q] < 0) {
      position[q] = static_cast<int>(unique.size());
      unique.push_back(q);
    }
    record_position[r] = position[q];
  }
  Var theta = theta_path(graph, batch, context, true);
  auto [a_q, b_q] = question_path(graph, unique, context, true);
  Var a = ops::gather_rows(a_q, record_position);
  Var b = ops::gather_rows(b_q, record_position);
  Var logits = ops::scale(ops::mul(a, ops::sub(theta, b)), kLogisticScale);
  std::vector<double> labels(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r) labels[r] = batch[r].score;
  return ops::mean(ops::binary_nll_logits(logits, labels));
}

std::pair<std::vector<double>, std::vector<double>> DirtModel::question_traits(std::span<const int> questions) const {
  std::vector<double> a, b;
  a.reserve(questions.size());
  b.reserve(questions.size());
  for (std::size_t begin = 0; begin < questions.size(); begin += kQuestionChunk) {
    const auto chunk = questions.subspan(begin, std::min(kQuestionChunk, questions.size() - begin));
    Graph graph;
    auto [av, bv] = question_path(graph, chunk, {}, false);
    a.insert(a.end(), av.value().data().begin(), av.value().data().end());
    b.insert(b.end(), bv.value().data().begin(), bv.value().data().end());
  }
  return {a, b};
}

std::vector<double> DirtModel::latent_traits(std::span<const ResponseRecord> records) const {
  std::vector<double> theta;
  theta.reserve(records.size());
  for (std::size_t begin = 0; begin < records.size(); begin += kRecordChunk) {
    Graph graph;
    Var t = theta_path(graph, records.subspan(begin, std::min(kRecordChunk, records.size() - begin)), {}, false);
    theta.insert(theta.end(), t.value().data().begin(), t.value().data().end());
  }
  return theta;
}

std::vector<DiagnosisResult> DirtModel::diagnose(std::span<const ResponseRecord> records) const {
  std::vector<int> unique, position(question_concepts_.size(), -1);
  for (const auto& r : records) {
    if (r.student < 0 || static_cast<std::size_t>(r.student) >= students_ || r.question < 0 ||
        static_cast<std::size_t>(r.question) >= question_concepts_.size())
      throw std::out_of_range("DIRT: unknown student or question index");
    if (position[r.question] < 0) {
      position[r.question] = static_cast<int>(unique.size());
      unique.push_back(r.question);
    }
  }
  const auto [a, b] = question_traits(unique);
  const auto theta = latent_traits(records);
  const Tensor& alpha = params_.get("alpha").value;
  std::vector<DiagnosisResult> out(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& d = out[i];
    const int u = position[records[i].question];
    d.theta = theta[i];
    d.a = a[u];
    d.b = b[u];
    d.p = irt_predict(d.theta, d.a, d.b);
    for (int c : question_concepts_[records[i].question])
      d.alpha_view.emplace_back(c, stable_sigmoid(alpha.at(records[i].student, c)));
    d.seen = student_seen(records[i].student);
  }
  return out;
}

DiagnosisResult DirtModel::diagnose(int student, int question) const {
  const ResponseRecord record{student, question, 0};
  return diagnose(std::span<const ResponseRecord>(&record, 1)).front();
}

std::vector<double> DirtModel::predict(std::span<const ResponseRecord> records) const {
  std::vector<double> p;
  p.reserve(records.size());
  for (const auto& d : diagnose(records)) p.push_back(d.p);
  return p;
}

void DirtModel::after_step() {
  if (config_.monotone_proficiency)
    for (const char* name : kMonotoneParameters)
      for (auto& v : params_.get(name).value.data()) v = std::max(v, 0.0);
  // The padding row stays the zero vector even when word vectors are trained.
  if (Parameter* words = params_.find("word_embedding")) {
    auto row = words->value.data().subspan(0, dim_);
    std::fill(row.begin(), row.end(), 0.0);
  }
}

std::vector<double> DirtModel::proficiency(int student) const {
  if (student < 0 || static_cast<std::size_t>(student) >= students_)
    throw std::out_of_range("DIRT: unknown student index " + std::to_string(student));
  std::vector<double> out(concepts_);
  const Tensor& alpha = params_.get("alpha").value;
  for (std::size_t c = 0; c < concepts_; ++c) out[c] = stable_sigmoid(alpha.at(student, c));
  return out;
}

DnnWeights DirtModel::theta_net() const { return dnn_copy(params_, "theta_net", config_.activation); }
DnnWeights DirtModel::discrimination_net() const { return dnn_copy(params_, "disc_net", config_.activation); }

LstmWeights DirtModel::lstm() const {
  if (kind_ != ModelKind::Dirt) throw std::logic_error("the ablated model has no text LSTM");
  LstmWeights w;
  for (int g = 0; g < 4; ++g) {
    w.wx[g] = params_.get(lstm_name("w_x", g)).value;
    w.wh[g] = params_.get(lstm_name("w_h", g)).value;
    w.b[g] = params_.get(lstm_name("b", g)).value;
  }
  return w;
}

const Tensor& DirtModel::concept_embedding() const { return params_.get("concept_embedding").value; }

const Tensor& DirtModel::word_embedding() const {
  const Parameter* trained = params_.find("word_embedding");
  return trained ? trained->value : frozen_words_;
}

}  // namespace dirt
