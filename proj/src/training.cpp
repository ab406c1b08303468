#include "dirt/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dirt/errors.hpp"
#include "dirt/evaluation.hpp"
#include "dirt/optim.hpp"
#include "dirt/random.hpp"

namespace dirt {

namespace {

constexpr std::uint64_t kValidationSalt = 0x9E3779B97F4A7C15ULL;

std::vector<Tensor> snapshot(const ParameterSet& params) {
  std::vector<Tensor> values;
  for (const auto& p : params) values.push_back(p.value);
  return values;
}

void restore(ParameterSet& params, const std::vector<Tensor>& values) {
  std::size_t i = 0;
  for (auto& p : params) p.value = values[i++];
}

std::vector<int> labels_of(std::span<const ResponseRecord> records) {
  std::vector<int> y(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) y[i] = records[i].score;
  return y;
}

void validate(const TrainConfig& config) {
  if (config.batch_size == 0) throw std::invalid_argument("train: batch size must be at least 1");
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw std::invalid_argument("train: dropout must lie in [0, 1)");
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0))
    throw std::invalid_argument("train: validation fraction must lie in [0, 1)");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

DatasetSplit validation_split(std::span<const ResponseRecord> train, const TrainConfig& config) {
  if (config.validation_fraction <= 0.0 || train.size() < 2) {
    DatasetSplit all;
    all.train.assign(train.begin(), train.end());
    all.ratio = 1.0;
    all.train_index.resize(train.size());
    std::iota(all.train_index.begin(), all.train_index.end(), std::size_t{0});
    return all;
  }
  return split_records(train, 1.0 - config.validation_fraction, config.seed ^ kValidationSalt);
}

TrainReport train(Model& model, std::span<const ResponseRecord> train_records, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate(config);
  if (train_records.empty()) throw DataError("train: empty training set");
  const auto started = std::chrono::steady_clock::now();

  const DatasetSplit parts = validation_split(train_records, config);
  const std::vector<ResponseRecord>& fit_set = parts.train;
  // Without held-out records the training set doubles as the stopping signal.
  const std::vector<ResponseRecord>& val_set = parts.test.empty() ? parts.train : parts.test;
  const auto val_labels = labels_of(val_set);

  model.mark_seen_students(fit_set);
  Adam adam(model.parameters(), AdamConfig{config.learning_rate, config.beta1, config.beta2, config.epsilon});
  Rng rng(config.seed);
  const ForwardContext context{Mode::Train, config.dropout, &rng};

  TrainReport report;
  report.best_val_loss = mean_nll(model.predict(val_set), val_set);
  std::vector<Tensor> best = snapshot(model.parameters());
  std::size_t stale = 0;
  double last_finite = report.best_val_loss;

  std::vector<std::size_t> order(fit_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<ResponseRecord> batch;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(fit_set[order[i]]);
      model.parameters().zero_grad();
      try {
        Graph graph;
        Var loss = model.batch_loss(graph, batch, context);
        total += loss.item() * static_cast<double>(batch.size());
        graph.backward(loss);
        adam.step();
      } catch (const NumericError& e) {
        throw NumericError("training diverged in epoch " + std::to_string(epoch) + " (last finite loss " +
                           format_double(last_finite) + "): " + e.what());
      }
      model.after_step();
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = total / static_cast<double>(fit_set.size());
    const auto probabilities = model.predict(val_set);
    stats.val_loss = mean_nll(probabilities, val_set);
    stats.val_auc = auc(probabilities, val_labels);
    if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss))
      throw NumericError("training diverged in epoch " + std::to_string(epoch) + " (last finite loss " +
                         format_double(last_finite) + ")");
    last_finite = stats.train_loss;
    report.epochs.push_back(stats);
    report.stopping_epoch = epoch;
    if (on_epoch) on_epoch(stats);

    if (stats.val_loss < report.best_val_loss) {
      report.best_val_loss = stats.val_loss;
      report.best_epoch = epoch;
      best = snapshot(model.parameters());
      stale = 0;
    } else if (++stale > config.patience) {
      break;
    }
  }
  restore(model.parameters(), best);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

void write_epoch_line(std::ostream& out, const EpochStats& stats) {
  out << stats.epoch << '\t' << format_double(stats.train_loss) << '\t' << format_double(stats.val_loss) << '\t'
      << (stats.val_auc ? format_double(*stats.val_auc) : std::string("NA")) << '\n';
}

void write_train_log(std::ostream& out, const TrainReport& report) {
  out << "epoch\ttrain_loss\tval_loss\tval_auc\n";
  for (const auto& e : report.epochs) write_epoch_line(out, e);
}

std::unique_ptr<Model> make_model(ModelKind kind, const Corpus& corpus, const ExperimentConfig& config) {
  switch (kind) {
    case ModelKind::Dirt:
    case ModelKind::DirtNa: return std::make_unique<DirtModel>(corpus, config.dirt, kind);
    case ModelKind::Irt: return std::make_unique<IrtModel>(corpus.student_count(), corpus.question_count());
    case ModelKind::Mirt: return std::make_unique<MirtModel>(corpus);
    case ModelKind::Dina: return std::make_unique<DinaModel>(corpus);
  }
  throw std::invalid_argument("make_model: unknown kind");
}

TrainReport fit_model(Model& model, std::span<const ResponseRecord> train_records, const ExperimentConfig& config,
                      const EpochCallback& on_epoch) {
  if (is_deep(model.kind()) || !config.classical_full_batch) return train(model, train_records, config.train, on_epoch);
  const auto started = std::chrono::steady_clock::now();
  const FitResult result = fit(model, train_records, config.fit);
  EpochStats stats;
  stats.epoch = 1;
  stats.train_loss = result.final_loss;
  stats.val_loss = result.final_loss;
  TrainReport report;
  report.epochs.push_back(stats);
  report.stopping_epoch = 1;
  report.best_epoch = 1;
  report.best_val_loss = result.final_loss;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (on_epoch) on_epoch(stats);
  return report;
}

}  // namespace dirt
