#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dirt/classical.hpp"
#include "dirt/corpus.hpp"
#include "dirt/dirt_model.hpp"
#include "dirt/model.hpp"

namespace dirt {

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double dropout = 0.2;
  std::size_t max_epochs = 20;
  std::size_t patience = 5;
  /// Share of the training records held out for early stopping; 0 disables it.
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> val_auc;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t stopping_epoch = 0;
  /// Epoch whose parameters were kept; 0 means the initial ones.
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double seconds = 0.0;
};

/// The training/validation partition train() uses for a given config.
DatasetSplit validation_split(std::span<const ResponseRecord> train, const TrainConfig& config);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam with dropout in training mode, early stopping on the
/// validation loss and restoration of the best parameters. Deterministic for
/// a fixed seed. Throws NumericError with the last finite loss on divergence.
TrainReport train(Model& model, std::span<const ResponseRecord> train_records, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// `epoch<TAB>train_loss<TAB>val_loss<TAB>val_auc` lines after a header.
void write_train_log(std::ostream& out, const TrainReport& report);
void write_epoch_line(std::ostream& out, const EpochStats& stats);

/// Everything needed to build and fit one model kind.
struct ExperimentConfig {
  DirtConfig dirt;
  TrainConfig train;
  FitConfig fit;
  /// Fit classical models with full-batch fit() rather than mini-batch train().
  bool classical_full_batch = true;
};

std::unique_ptr<Model> make_model(ModelKind kind, const Corpus& corpus, const ExperimentConfig& config);

/// Dispatches to train() or fit() per the config. A full-batch fit reports a
/// single epoch whose validation columns repeat the training loss.
TrainReport fit_model(Model& model, std::span<const ResponseRecord> train_records, const ExperimentConfig& config,
                      const EpochCallback& on_epoch = {});

}  // namespace dirt
