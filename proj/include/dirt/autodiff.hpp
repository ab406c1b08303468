#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dirt/random.hpp"
#include "dirt/tensor.hpp"

// Tape-based reverse-mode differentiation. A Graph records nodes in creation
// order, which is a topological order, so backward is a single reverse sweep.
// Parameters live outside the graph; parameter leaves borrow their value and
// add their gradient into Parameter::grad when backward runs.

namespace dirt {

enum class OpKind {
  Constant,
  Parameter,
  MatMul,
  Add,
  Sub,
  Mul,
  AddBias,
  Scale,
  Shift,
  Tanh,
  Sigmoid,
  Exp,
  Log,
  Softmax,
  SegmentSoftmax,
  Sum,
  Mean,
  RowSum,
  RowMean,
  Concat,
  ConcatCols,
  SliceCols,
  GatherRows,
  GatherFlat,
  SegmentSum,
  RowScale,
  RowDot,
  Dropout,
  Reshape,
  Transpose,
  BinaryNll,
  BinaryNllLogits,
};

std::string_view op_name(OpKind kind);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

/// Named, address-stable collection of model tensors.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor value, bool trainable = true);
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;

  void zero_grad();
  std::size_t scalar_count() const;
  std::size_t size() const { return params_.size(); }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::deque<Parameter> params_;
};

enum class Mode { Train, Infer };

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  const Tensor& value() const;
  /// Gradient of the last backward root. Zeros if the node was not reached or
  /// has no parameter upstream (constants are not differentiated).
  Tensor grad() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }

  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  explicit operator bool() const { return graph_ != nullptr; }

 private:
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// Leaf that borrows `value`; the caller keeps it alive for the graph's lifetime.
  Var constant_ref(const Tensor& value);
  Var param(Parameter& parameter);

  /// Reverse sweep from a one-element root. Parameter leaves add into
  /// Parameter::grad, so callers zero gradients between steps.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind kind = OpKind::Constant;
    std::vector<int> inputs;
    Tensor owned;
    const Tensor* borrowed = nullptr;
    Parameter* parameter = nullptr;
    Tensor grad;
    double scalar = 0.0;
    std::size_t count = 0;
    std::vector<int> index;
    Tensor aux;
    // True when some Parameter lies upstream; other nodes never receive grads.
    bool needs_grad = false;

    const Tensor& value() const { return borrowed ? *borrowed : owned; }
  };

  Var push(Node node);
  const Node& node(Var v) const;
  Tensor& grad_slot(int id);
  void propagate(int id);

  std::vector<Node> nodes_;
  // Write-only sink for gradients of inputs that do not need them.
  Tensor scratch_;

  friend class Var;
  friend struct OpBuilder;
};

namespace ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// x[r×n] + bias[n] broadcast over rows.
Var add_bias(Var x, Var bias);
Var scale(Var x, double factor);
Var shift(Var x, double offset);
Var tanh(Var x);
Var sigmoid(Var x);
Var exp(Var x);
Var log(Var x);
/// Softmax over all entries of a rank-1 tensor (max-subtracted).
Var softmax(Var x);
/// Softmax within each segment of a rank-1 tensor; segment[i] in [0, segments).
Var segment_softmax(Var x, std::span<const int> segment, std::size_t segments);
Var sum(Var x);
Var mean(Var x);
/// Sum over the trailing extent: [r×n] -> [r].
Var row_sum(Var x);
Var row_mean(Var x);
/// Concatenation of rank-1 tensors.
Var concat(std::span<const Var> parts);
/// Column-wise concatenation of matrices with equal row counts.
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var x, std::size_t begin, std::size_t width);
/// Rows of x selected by index (rank-1 x selects entries).
Var gather_rows(Var x, std::span<const int> rows);
/// Entries of x selected by flat row-major index; result is rank-1.
Var gather_flat(Var x, std::span<const int> flat);
/// out[s, :] = sum of x[i, :] over i with segment[i] == s.
Var segment_sum(Var x, std::span<const int> segment, std::size_t segments);
/// out[i, :] = w[i] * x[i, :].
Var row_scale(Var x, Var w);
/// out[i] = <a[i, :], b[i, :]>.
Var row_dot(Var a, Var b);
/// Inverted dropout: in Train mode zero each entry with probability `rate` and
/// scale survivors by 1/(1-rate); in Infer mode returns x unchanged.
Var dropout(Var x, double rate, Mode mode, Rng& rng);
Var reshape(Var x, Shape shape);
Var transpose(Var x);
/// Per-entry negative log-likelihood of binary labels given probabilities,
/// with probabilities clamped to [1e-12, 1 - 1e-12].
Var binary_nll(Var probability, std::span<const double> labels);
/// Same loss from logits, computed as softplus(z) - r*z without forming sigmoid.
Var binary_nll_logits(Var logits, std::span<const double> labels);

}  // namespace ops

/// Numerically stable logistic function shared by every code path.
double stable_sigmoid(double z);
/// log(1 + e^z) without overflow.
double softplus(double z);

constexpr double kProbabilityClamp = 1e-12;

struct GradCheckOptions {
  double step = 1e-5;
  /// 0 checks every entry; otherwise a seeded sample of this many per parameter.
  std::size_t max_entries_per_parameter = 0;
  std::uint64_t sample_seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

using GraphBuilder = std::function<Var(Graph&)>;

/// Compares backward() against central differences for every trainable entry
/// of `params`. The builder is re-run for each probe and must be deterministic.
GradCheckReport grad_check(ParameterSet& params, const GraphBuilder& build,
                           const GradCheckOptions& options = {});

/// Seeded form: `setup` fills `params` from the random source and returns the
/// graph builder to check.
using SeededGraphSetup = std::function<GraphBuilder(ParameterSet&, Rng&)>;
GradCheckReport grad_check(const SeededGraphSetup& setup, std::uint64_t seed,
                           const GradCheckOptions& options = {});

}  // namespace dirt
