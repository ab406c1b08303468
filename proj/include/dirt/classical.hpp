#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dirt/corpus.hpp"
#include "dirt/model.hpp"

// Classical cognitive diagnosis baselines: the logistic item response model,
// its multidimensional extension, and the conjunctive DINA model, all fitted by
// gradient-based maximum likelihood on the shared autodiff core.

namespace dirt {

/// 1 / (1 + exp(-1.7 a (theta - b))).
double irt_predict(double theta, double a, double b);

/// sigmoid(aᵀθ + d). Throws ShapeError when the lengths differ.
double mirt_predict(std::span<const double> theta, std::span<const double> a, double d);

/// 1 - slip when every required concept is mastered, otherwise guess.
/// `mastery` holds 0/1 per concept. Throws std::invalid_argument on an empty
/// requirement set or slip/guess outside (0, 1).
double dina_predict(std::span<const int> mastery, std::span<const int> required, double slip, double guess);

/// Raw parameters that feed a bounded transform are kept in this box so the
/// transformed value stays strictly inside its open interval in floating point.
inline constexpr double kRawLimit = 30.0;

class IrtModel : public Model {
 public:
  IrtModel(std::size_t students, std::size_t questions);

  ModelKind kind() const override { return ModelKind::Irt; }
  Var batch_loss(Graph& graph, std::span<const ResponseRecord> batch, const ForwardContext& context) override;
  std::vector<double> predict(std::span<const ResponseRecord> records) const override;
  void after_step() override;

  double theta(int student) const;
  double discrimination(int question) const;
  double difficulty(int question) const;
};

class MirtModel : public Model {
 public:
  explicit MirtModel(const Corpus& corpus);

  ModelKind kind() const override { return ModelKind::Mirt; }
  Var batch_loss(Graph& graph, std::span<const ResponseRecord> batch, const ForwardContext& context) override;
  std::vector<double> predict(std::span<const ResponseRecord> records) const override;

  std::span<const double> theta(int student) const;
  std::span<const double> discrimination(int question) const;
  double intercept(int question) const;

 private:
  std::vector<std::vector<int>> support_;
  Tensor mask_;
};

class DinaModel : public Model {
 public:
  explicit DinaModel(const Corpus& corpus);

  ModelKind kind() const override { return ModelKind::Dina; }
  Var batch_loss(Graph& graph, std::span<const ResponseRecord> batch, const ForwardContext& context) override;
  /// Uses the thresholded (binary) mastery, as the DINA gate prescribes.
  std::vector<double> predict(std::span<const ResponseRecord> records) const override;

  /// Relaxed mastery in (0, 1).
  double mastery_level(int student, int concept_index) const;
  std::vector<int> mastery(int student) const;
  double slip(int question) const;
  double guess(int question) const;

 private:
  std::vector<std::vector<int>> required_;
  Tensor mask_;
};

struct FitConfig {
  std::size_t iterations = 400;
  double learning_rate = 0.05;
  /// Stop early once the full-batch loss changes by less than this.
  double tolerance = 0.0;
};

struct FitResult {
  std::vector<double> losses;
  double final_loss = 0.0;
};

/// Full-batch maximum-likelihood fit with Adam. Deterministic: no sampling is
/// involved. Throws NumericError naming the iteration on divergence.
FitResult fit(Model& model, std::span<const ResponseRecord> train, const FitConfig& config);

}  // namespace dirt
