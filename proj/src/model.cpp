#include "dirt/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dirt {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Dirt: return "dirt";
    case ModelKind::DirtNa: return "dirtna";
    case ModelKind::Irt: return "irt";
    case ModelKind::Mirt: return "mirt";
    case ModelKind::Dina: return "dina";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::Dirt, ModelKind::DirtNa, ModelKind::Irt, ModelKind::Mirt, ModelKind::Dina})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown model '" + std::string(name) + "' (expected dirt, dirtna, irt, mirt or dina)");
}

bool is_deep(ModelKind kind) { return kind == ModelKind::Dirt || kind == ModelKind::DirtNa; }

double bounded_from_raw(double raw) { return 8.0 * (stable_sigmoid(raw) - 0.5); }

double raw_from_bounded(double value) {
  const double p = value / 8.0 + 0.5;
  return std::log(p / (1.0 - p));
}

Model::Model(std::size_t students) { params_.add("student_seen", Tensor({std::max<std::size_t>(students, 1)}), false); }

void Model::mark_seen_students(std::span<const ResponseRecord> train) {
  Tensor& seen = params_.get("student_seen").value;
  for (const auto& r : train) seen[static_cast<std::size_t>(r.student)] = 1.0;
}

bool Model::student_seen(int student) const {
  const Tensor& seen = params_.get("student_seen").value;
  return student >= 0 && static_cast<std::size_t>(student) < seen.size() && seen[student] != 0.0;
}

Var Model::leaf(Graph& graph, const Parameter& parameter, bool differentiable) {
  if (differentiable) return graph.param(const_cast<Parameter&>(parameter));
  return graph.constant_ref(parameter.value);
}

double mean_nll(std::span<const double> probabilities, std::span<const ResponseRecord> records) {
  if (probabilities.size() != records.size() || records.empty())
    throw std::invalid_argument("mean_nll: need equally many probabilities and records");
  double total = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double q = std::clamp(probabilities[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    total += records[i].score ? -std::log(q) : -std::log(1.0 - q);
  }
  return total / static_cast<double>(records.size());
}

}  // namespace dirt
