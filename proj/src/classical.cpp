#include "dirt/classical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dirt/errors.hpp"
#include "dirt/optim.hpp"

namespace dirt {

double irt_predict(double theta, double a, double b) {
  return stable_sigmoid(kLogisticScale * (a * (theta - b)));
}

double mirt_predict(std::span<const double> theta, std::span<const double> a, double d) {
  if (theta.size() != a.size()) {
    throw ShapeError("mirt_predict: theta has " + std::to_string(theta.size()) + " entries, a has " +
                     std::to_string(a.size()));
  }
  double z = d;
  for (std::size_t i = 0; i < a.size(); ++i) z += a[i] * theta[i];
  return stable_sigmoid(z);
}

double dina_predict(std::span<const int> mastery, std::span<const int> required, double slip, double guess) {
  if (required.empty()) throw std::invalid_argument("dina_predict: empty required concept set");
  if (!(slip > 0.0 && slip < 1.0) || !(guess > 0.0 && guess < 1.0))
    throw std::invalid_argument("dina_predict: slip and guess must lie in (0, 1)");
  for (int c : required) {
    if (c < 0 || static_cast<std::size_t>(c) >= mastery.size())
      throw std::invalid_argument("dina_predict: concept index out of range");
    if (!mastery[c]) return guess;
  }
  return 1.0 - slip;
}

namespace {

std::vector<double> labels_of(std::span<const ResponseRecord> batch) {
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) y[i] = batch[i].score;
  return y;
}

std::vector<int> students_of(std::span<const ResponseRecord> batch) {
  std::vector<int> s(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) s[i] = batch[i].student;
  return s;
}

std::vector<int> questions_of(std::span<const ResponseRecord> batch) {
  std::vector<int> q(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) q[i] = batch[i].question;
  return q;
}

Var bounded(Var raw) { return ops::scale(ops::shift(ops::sigmoid(raw), -0.5), 8.0); }

/// Rows of a per-question concept mask for the batch.
Tensor mask_rows(const Tensor& mask, std::span<const ResponseRecord> batch) {
  const std::size_t cols = mask.cols();
  Tensor out({batch.size(), cols});
  for (std::size_t i = 0; i < batch.size(); ++i)
    std::copy_n(mask.ptr() + static_cast<std::size_t>(batch[i].question) * cols, cols, out.ptr() + i * cols);
  return out;
}

Tensor concept_mask(const Corpus& corpus) {
  Tensor mask({std::max<std::size_t>(corpus.question_count(), 1), std::max<std::size_t>(corpus.concept_count(), 1)});
  for (std::size_t q = 0; q < corpus.question_count(); ++q)
    for (int c : corpus.questions()[q].concepts) mask.at(q, static_cast<std::size_t>(c)) = 1.0;
  return mask;
}

void clamp_raw(Parameter& p) {
  for (auto& v : p.value.data()) v = std::clamp(v, -kRawLimit, kRawLimit);
}

}  // namespace

// ---------------------------------------------------------------------------
// IRT

IrtModel::IrtModel(std::size_t students, std::size_t questions) : Model(students) {
  // Symmetric start: a = 1, b = 0, theta = 0. Students with identical records
  // then follow identical trajectories.
  params_.add("theta", Tensor({std::max<std::size_t>(students, 1)}));
  params_.add("a_raw", Tensor({std::max<std::size_t>(questions, 1)}, raw_from_bounded(1.0)));
  params_.add("b_raw", Tensor({std::max<std::size_t>(questions, 1)}));
}

Var IrtModel::batch_loss(Graph& graph, std::span<const ResponseRecord> batch, const ForwardContext&) {
  const auto s = students_of(batch);
  const auto q = questions_of(batch);
  Var theta = ops::gather_rows(graph.param(params_.get("theta")), s);
  Var a = bounded(ops::gather_rows(graph.param(params_.get("a_raw")), q));
  Var b = bounded(ops::gather_rows(graph.param(params_.get("b_raw")), q));
  Var z = ops::scale(ops::mul(a, ops::sub(theta, b)), kLogisticScale);
  return ops::mean(ops::binary_nll_logits(z, labels_of(batch)));
}

std::vector<double> IrtModel::predict(std::span<const ResponseRecord> records) const {
  std::vector<double> p(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    p[i] = irt_predict(theta(records[i].student), discrimination(records[i].question), difficulty(records[i].question));
  return p;
}

void IrtModel::after_step() {
  clamp_raw(params_.get("a_raw"));
  clamp_raw(params_.get("b_raw"));
}

double IrtModel::theta(int student) const { return params_.get("theta").value[student]; }
double IrtModel::discrimination(int question) const { return bounded_from_raw(params_.get("a_raw").value[question]); }
double IrtModel::difficulty(int question) const { return bounded_from_raw(params_.get("b_raw").value[question]); }

// ---------------------------------------------------------------------------
// MIRT

MirtModel::MirtModel(const Corpus& corpus) : Model(corpus.student_count()), mask_(concept_mask(corpus)) {
  for (const auto& q : corpus.questions()) support_.push_back(q.concepts);
  const std::size_t students = std::max<std::size_t>(corpus.student_count(), 1);
  params_.add("theta", Tensor({students, mask_.cols()}));
  params_.add("a", mask_);
  params_.add("d", Tensor({mask_.rows()}));
}

Var MirtModel::batch_loss(Graph& graph, std::span<const ResponseRecord> batch, const ForwardContext&) {
  Var theta = ops::gather_rows(graph.param(params_.get("theta")), students_of(batch));
  Var a = ops::gather_rows(graph.param(params_.get("a")), questions_of(batch));
  Var mask = graph.constant(mask_rows(mask_, batch));
  Var d = ops::gather_rows(graph.param(params_.get("d")), questions_of(batch));
  Var z = ops::add(ops::row_sum(ops::mul(ops::mul(a, mask), theta)), d);
  return ops::mean(ops::binary_nll_logits(z, labels_of(batch)));
}

std::vector<double> MirtModel::predict(std::span<const ResponseRecord> records) const {
  std::vector<double> p(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto th = theta(records[i].student);
    const auto a = discrimination(records[i].question);
    double z = intercept(records[i].question);
    for (int c : support_[records[i].question]) z += a[c] * th[c];
    p[i] = stable_sigmoid(z);
  }
  return p;
}

std::span<const double> MirtModel::theta(int student) const { return params_.get("theta").value.row(student); }
std::span<const double> MirtModel::discrimination(int question) const { return params_.get("a").value.row(question); }
double MirtModel::intercept(int question) const { return params_.get("d").value[question]; }

// ---------------------------------------------------------------------------
// DINA

DinaModel::DinaModel(const Corpus& corpus) : Model(corpus.student_count()), mask_(concept_mask(corpus)) {
  for (const auto& q : corpus.questions()) required_.push_back(q.concepts);
  const std::size_t students = std::max<std::size_t>(corpus.student_count(), 1);
  const double start = std::log(0.2 / 0.8);
  params_.add("mastery_raw", Tensor({students, mask_.cols()}));
  params_.add("slip_raw", Tensor({mask_.rows()}, start));
  params_.add("guess_raw", Tensor({mask_.rows()}, start));
}

Var DinaModel::batch_loss(Graph& graph, std::span<const ResponseRecord> batch, const ForwardContext&) {
  const auto q = questions_of(batch);
  Var mastery = ops::sigmoid(ops::gather_rows(graph.param(params_.get("mastery_raw")), students_of(batch)));
  Var mask = graph.constant(mask_rows(mask_, batch));
  // Relaxed conjunctive gate: product of mastery levels over required concepts.
  Var eta = ops::exp(ops::row_sum(ops::mul(ops::log(mastery), mask)));
  Var slip = ops::sigmoid(ops::gather_rows(graph.param(params_.get("slip_raw")), q));
  Var guess = ops::sigmoid(ops::gather_rows(graph.param(params_.get("guess_raw")), q));
  Var gap = ops::shift(ops::scale(ops::add(slip, guess), -1.0), 1.0);
  Var p = ops::add(guess, ops::mul(eta, gap));
  return ops::mean(ops::binary_nll(p, labels_of(batch)));
}

std::vector<double> DinaModel::predict(std::span<const ResponseRecord> records) const {
  std::vector<double> p(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto m = mastery(records[i].student);
    const int q = records[i].question;
    p[i] = dina_predict(m, required_[q], slip(q), guess(q));
  }
  return p;
}

double DinaModel::mastery_level(int student, int concept_index) const {
  return stable_sigmoid(params_.get("mastery_raw").value.at(student, concept_index));
}

std::vector<int> DinaModel::mastery(int student) const {
  const auto row = params_.get("mastery_raw").value.row(student);
  std::vector<int> m(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) m[c] = stable_sigmoid(row[c]) >= 0.5;
  return m;
}

double DinaModel::slip(int question) const { return stable_sigmoid(params_.get("slip_raw").value[question]); }
double DinaModel::guess(int question) const { return stable_sigmoid(params_.get("guess_raw").value[question]); }

// ---------------------------------------------------------------------------
// Fitting

FitResult fit(Model& model, std::span<const ResponseRecord> train, const FitConfig& config) {
  if (train.empty()) throw DataError("fit: empty training set");
  model.mark_seen_students(train);
  Adam adam(model.parameters(), AdamConfig{.learning_rate = config.learning_rate});
  FitResult result;
  const ForwardContext context{Mode::Train, 0.0, nullptr};
  for (std::size_t it = 0; it < config.iterations; ++it) {
    model.parameters().zero_grad();
    double loss = 0.0;
    try {
      Graph graph;
      Var root = model.batch_loss(graph, train, context);
      loss = root.item();
      graph.backward(root);
      adam.step();
    } catch (const NumericError& e) {
      throw NumericError("fit diverged at iteration " + std::to_string(it + 1) + ": " + e.what());
    }
    model.after_step();
    result.losses.push_back(loss);
    if (config.tolerance > 0.0 && result.losses.size() >= 2 &&
        std::abs(result.losses[result.losses.size() - 2] - loss) < config.tolerance)
      break;
  }
  Graph graph;
  result.final_loss = model.batch_loss(graph, train, context).item();
  return result;
}

}  // namespace dirt
