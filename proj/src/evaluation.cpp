#include "dirt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "dirt/errors.hpp"

namespace dirt {

std::optional<double> auc(std::span<const double> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("auc: predictions and labels differ in length");
  const std::size_t n = predictions.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return predictions[a] < predictions[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && predictions[order[j]] == predictions[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]]) {
        positive_rank_sum += midrank;
        ++positives;
      }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

MetricsReport compute_metrics(std::span<const double> predictions, std::span<const int> labels, std::string label) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("compute_metrics: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(labels.size()) + " labels");
  if (predictions.empty()) throw std::invalid_argument("compute_metrics: no records");
  MetricsReport m;
  m.n = predictions.size();
  m.label = std::move(label);
  double squared = 0.0, absolute = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < m.n; ++i) {
    const double e = predictions[i] - labels[i];
    squared += e * e;
    absolute += std::abs(e);
    correct += static_cast<int>(predictions[i] >= 0.5) == labels[i];
  }
  const double n = static_cast<double>(m.n);
  m.rmse = std::sqrt(squared / n);
  m.mae = absolute / n;
  m.acc = static_cast<double>(correct) / n;
  m.auc = auc(predictions, labels);
  return m;
}

MetricsReport evaluate(const Model& model, std::span<const ResponseRecord> records, std::string label) {
  std::vector<int> labels(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) labels[i] = records[i].score;
  return compute_metrics(model.predict(records), labels, std::move(label));
}

bool operator==(const ResultRow& a, const ResultRow& b) {
  if (a.model != b.model || a.protocol != b.protocol || a.param != b.param) return false;
  if (a.metrics.has_value() != b.metrics.has_value()) return false;
  if (!a.metrics) return true;
  const auto& x = *a.metrics;
  const auto& y = *b.metrics;
  return x.rmse == y.rmse && x.mae == y.mae && x.auc == y.auc && x.acc == y.acc && x.n == y.n && x.label == y.label;
}

namespace {

std::string ratio_label(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", ratio);
  return buf;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::vector<ResultRow> sparsity_sweep(std::span<const ModelKind> kinds, const Corpus& corpus,
                                      std::span<const double> ratios, std::uint64_t seed,
                                      const ExperimentConfig& config) {
  for (double r : ratios)
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("sparsity_sweep: ratios must lie in (0, 1)");
  std::vector<ResultRow> rows;
  for (ModelKind kind : kinds) {
    for (double ratio : ratios) {
      const DatasetSplit split = split_records(corpus.records(), ratio, seed);
      auto model = make_model(kind, corpus, config);
      fit_model(*model, split.train, config);
      ResultRow row{std::string(to_string(kind)), "sweep", ratio_label(ratio), std::nullopt};
      if (!split.test.empty()) row.metrics = evaluate(*model, split.test, "test");
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ResultRow> rare_question_rows(const Model& model, const DatasetSplit& split,
                                          std::span<const std::size_t> caps) {
  std::vector<ResultRow> rows;
  for (std::size_t cap : caps) {
    const auto subset = rare_question_subset(split, cap);
    ResultRow row{std::string(to_string(model.kind())), "rare", std::to_string(cap), std::nullopt};
    if (!subset.empty()) row.metrics = evaluate(model, subset, "rare<=" + std::to_string(cap));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ResultRow> rare_question_eval(std::span<const ModelKind> kinds, const Corpus& corpus,
                                          const DatasetSplit& split, std::span<const std::size_t> caps,
                                          const ExperimentConfig& config) {
  std::vector<ResultRow> rows;
  for (ModelKind kind : kinds) {
    auto model = make_model(kind, corpus, config);
    fit_model(*model, split.train, config);
    auto part = rare_question_rows(*model, split, caps);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

void write_table(std::ostream& out, std::span<const ResultRow> rows) {
  out << "model\tprotocol\tparam\trmse\tmae\tauc\tacc\tn\n";
  for (const auto& r : rows) {
    out << r.model << '\t' << r.protocol << '\t' << r.param << '\t';
    if (!r.metrics) {
      out << "NA\tNA\tNA\tNA\t0\n";
      continue;
    }
    const auto& m = *r.metrics;
    out << fixed(m.rmse) << '\t' << fixed(m.mae) << '\t' << (m.auc ? fixed(*m.auc) : std::string("NA")) << '\t'
        << fixed(m.acc) << '\t' << m.n << '\n';
  }
}

std::string to_json(std::span<const ResultRow> rows) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["model"] = r.model;
    row["protocol"] = r.protocol;
    row["param"] = r.param;
    if (r.metrics) {
      row["rmse"] = r.metrics->rmse;
      row["mae"] = r.metrics->mae;
      row["auc"] = r.metrics->auc ? nlohmann::ordered_json(*r.metrics->auc) : nlohmann::ordered_json(nullptr);
      row["acc"] = r.metrics->acc;
      row["n"] = r.metrics->n;
    } else {
      row["rmse"] = nullptr;
      row["mae"] = nullptr;
      row["auc"] = nullptr;
      row["acc"] = nullptr;
      row["n"] = 0;
    }
    doc.push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

void write_json(const std::filesystem::path& path, std::span<const ResultRow> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(rows);
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace dirt
