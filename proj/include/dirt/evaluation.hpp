#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dirt/corpus.hpp"
#include "dirt/model.hpp"
#include "dirt/training.hpp"

namespace dirt {

struct MetricsReport {
  double rmse = 0.0;
  double mae = 0.0;
  /// Absent when the labels contain a single class.
  std::optional<double> auc;
  double acc = 0.0;
  std::size_t n = 0;
  std::string label;
};

/// Area under the ROC curve by the midrank statistic; absent for single-class labels.
std::optional<double> auc(std::span<const double> predictions, std::span<const int> labels);

/// Throws std::invalid_argument on empty or unequal inputs.
MetricsReport compute_metrics(std::span<const double> predictions, std::span<const int> labels,
                              std::string label = {});

MetricsReport evaluate(const Model& model, std::span<const ResponseRecord> records, std::string label = {});

/// One line of a results table. `metrics` is absent for empty subsets.
struct ResultRow {
  std::string model;
  std::string protocol;
  std::string param;
  std::optional<MetricsReport> metrics;

  friend bool operator==(const ResultRow& a, const ResultRow& b);
};

/// Trains each model kind on the nested split for every ratio and scores the test part.
std::vector<ResultRow> sparsity_sweep(std::span<const ModelKind> kinds, const Corpus& corpus,
                                      std::span<const double> ratios, std::uint64_t seed,
                                      const ExperimentConfig& config);

/// Scores a fitted model on the rare-question subset for each cap.
std::vector<ResultRow> rare_question_rows(const Model& model, const DatasetSplit& split,
                                          std::span<const std::size_t> caps);

/// Trains each model kind on `split.train`, then scores the rare-question subsets.
std::vector<ResultRow> rare_question_eval(std::span<const ModelKind> kinds, const Corpus& corpus,
                                          const DatasetSplit& split, std::span<const std::size_t> caps,
                                          const ExperimentConfig& config);

/// Tab-separated table with a header line; absent values print as NA.
void write_table(std::ostream& out, std::span<const ResultRow> rows);
/// JSON array of row objects; absent values are null.
void write_json(const std::filesystem::path& path, std::span<const ResultRow> rows);
std::string to_json(std::span<const ResultRow> rows);

}  // namespace dirt
