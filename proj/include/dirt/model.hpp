#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "dirt/autodiff.hpp"
#include "dirt/corpus.hpp"

namespace dirt {

enum class ModelKind { Dirt, DirtNa, Irt, Mirt, Dina };

std::string_view to_string(ModelKind kind);
/// Throws std::invalid_argument listing the accepted names.
ModelKind parse_model_kind(std::string_view name);
bool is_deep(ModelKind kind);

/// Discrimination and difficulty live in (-4, 4): raw values pass through
/// 8 * (sigmoid(raw) - 0.5).
double bounded_from_raw(double raw);
double raw_from_bounded(double value);

/// Scaling constant of the logistic item response function.
inline constexpr double kLogisticScale = 1.7;

struct ForwardContext {
  Mode mode = Mode::Infer;
  double dropout = 0.0;
  Rng* rng = nullptr;
};

/// Common surface of every trainable response model.
class Model {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  /// Mean negative log-likelihood of `batch` as a scalar graph node.
  virtual Var batch_loss(Graph& graph, std::span<const ResponseRecord> batch, const ForwardContext& context) = 0;

  /// Correct-answer probabilities in inference mode.
  virtual std::vector<double> predict(std::span<const ResponseRecord> records) const = 0;

  /// Hook run after every optimizer step (projections onto feasible boxes).
  virtual void after_step() {}

  /// Students that contributed training records. Stored as a non-trainable
  /// tensor so checkpoints carry it.
  void mark_seen_students(std::span<const ResponseRecord> train);
  bool student_seen(int student) const;

 protected:
  explicit Model(std::size_t students);

  /// Leaf for a parameter: differentiable in training graphs, a borrowed
  /// constant otherwise.
  static Var leaf(Graph& graph, const Parameter& parameter, bool differentiable);

  ParameterSet params_;
};

/// Mean binary negative log-likelihood of probabilities, the scalar objective
/// shared by all models; probabilities clamped to [1e-12, 1 - 1e-12].
double mean_nll(std::span<const double> probabilities, std::span<const ResponseRecord> records);

}  // namespace dirt
