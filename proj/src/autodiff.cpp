#include "dirt/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dirt/errors.hpp"
#include "dirt/kernels.hpp"

namespace dirt {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Parameter: return "parameter";
    case OpKind::MatMul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::AddBias: return "add_bias";
    case OpKind::Scale: return "scale";
    case OpKind::Shift: return "shift";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::Exp: return "exp";
    case OpKind::Log: return "log";
    case OpKind::Softmax: return "softmax";
    case OpKind::SegmentSoftmax: return "segment_softmax";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::RowSum: return "row_sum";
    case OpKind::RowMean: return "row_mean";
    case OpKind::Concat: return "concat";
    case OpKind::ConcatCols: return "concat_cols";
    case OpKind::SliceCols: return "slice_cols";
    case OpKind::GatherRows: return "gather_rows";
    case OpKind::GatherFlat: return "gather_flat";
    case OpKind::SegmentSum: return "segment_sum";
    case OpKind::RowScale: return "row_scale";
    case OpKind::RowDot: return "row_dot";
    case OpKind::Dropout: return "dropout";
    case OpKind::Reshape: return "reshape";
    case OpKind::Transpose: return "transpose";
    case OpKind::BinaryNll: return "binary_nll";
    case OpKind::BinaryNllLogits: return "binary_nll_logits";
  }
  return "unknown";
}

double stable_sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

// ---------------------------------------------------------------------------
// ParameterSet

Parameter& ParameterSet::add(std::string name, Tensor value, bool trainable) {
  if (find(name)) throw std::invalid_argument("parameter '" + name + "' already exists");
  Tensor grad(value.shape());
  params_.push_back(Parameter{std::move(name), std::move(value), std::move(grad), trainable});
  return params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

Parameter& ParameterSet::get(std::string_view name) {
  if (auto* p = find(name)) return *p;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

const Parameter& ParameterSet::get(std::string_view name) const {
  if (const auto* p = find(name)) return *p;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) {
    if (!p.grad.same_shape(p.value)) p.grad = Tensor(p.value.shape());
    else p.grad.fill(0.0);
  }
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Graph

const Tensor& Var::value() const { return graph_->node(*this).value(); }

Tensor Var::grad() const {
  const auto& n = graph_->node(*this);
  if (n.grad.empty()) return Tensor(n.value().shape());
  return n.grad;
}

const Graph::Node& Graph::node(Var v) const {
  if (v.graph() != this || v.id() < 0 || static_cast<std::size_t>(v.id()) >= nodes_.size())
    throw std::invalid_argument("variable does not belong to this graph");
  return nodes_[v.id()];
}

Var Graph::push(Node node) {
  if (!node.value().all_finite()) {
    throw NumericError(std::string(op_name(node.kind)) + " produced non-finite values (shape " +
                       node.value().shape_string() + ")");
  }
  node.needs_grad = node.kind == OpKind::Parameter;
  for (int i : node.inputs) node.needs_grad = node.needs_grad || nodes_[i].needs_grad;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Graph::constant(Tensor value) {
  Node n;
  n.kind = OpKind::Constant;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Graph::constant_ref(const Tensor& value) {
  Node n;
  n.kind = OpKind::Constant;
  n.borrowed = &value;
  return push(std::move(n));
}

Var Graph::param(Parameter& parameter) {
  if (!parameter.grad.same_shape(parameter.value)) parameter.grad = Tensor(parameter.value.shape());
  Node n;
  n.kind = OpKind::Parameter;
  n.borrowed = &parameter.value;
  n.parameter = &parameter;
  return push(std::move(n));
}

Tensor& Graph::grad_slot(int id) {
  auto& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value().shape());
  return n.grad;
}

void Graph::backward(Var root) {
  const auto& r = node(root);
  if (r.value().size() != 1) {
    throw ShapeError("backward: root must be a scalar, got shape " + r.value().shape_string());
  }
  for (auto& n : nodes_) n.grad = Tensor();
  grad_slot(root.id())[0] = 1.0;
  for (int id = root.id(); id >= 0; --id) {
    if (nodes_[id].grad.empty() || !nodes_[id].needs_grad) continue;
    propagate(id);
  }
}

namespace {

void add_into(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

[[noreturn]] void shape_mismatch(std::string_view op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
}

[[noreturn]] void bad_shape(std::string_view op, const Tensor& a, std::string_view expected) {
  throw ShapeError(std::string(op) + ": expected " + std::string(expected) + ", got " + a.shape_string());
}

}  // namespace

void Graph::propagate(int id) {
  // grad_slot() allocates other nodes' grads but never resizes nodes_, so the
  // references below stay valid.
  Node& n = nodes_[id];
  const Tensor& g = n.grad;
  const Tensor& y = n.value();
  auto in = [&](int k) -> const Tensor& { return nodes_[n.inputs[k]].value(); };
  auto want = [&](int k) { return nodes_[n.inputs[k]].needs_grad; };
  auto din = [&](int k) -> Tensor& {
    if (want(k)) return grad_slot(n.inputs[k]);
    const Tensor& v = in(k);
    if (!scratch_.same_shape(v)) scratch_ = Tensor(v.shape());
    return scratch_;
  };

  switch (n.kind) {
    case OpKind::Constant:
      break;
    case OpKind::Parameter:
      add_into(n.parameter->grad.data(), g.data());
      break;
    case OpKind::MatMul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const std::size_t m = a.rows(), k = a.cols(), cols = b.cols();
      if (want(0)) kernels::matmul_add_bt(g.data(), b.data(), din(0).data(), m, cols, k);
      if (want(1)) kernels::matmul_add_at(a.data(), g.data(), din(1).data(), m, k, cols);
      break;
    }
    case OpKind::Add:
      add_into(din(0).data(), g.data());
      add_into(din(1).data(), g.data());
      break;
    case OpKind::Sub: {
      add_into(din(0).data(), g.data());
      auto d = din(1).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= g[i];
      break;
    }
    case OpKind::Mul: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      auto da = din(0).data();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * b[i];
      auto db = din(1).data();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[i] * a[i];
      break;
    }
    case OpKind::AddBias: {
      add_into(din(0).data(), g.data());
      auto db = din(1).data();
      const std::size_t cols = db.size();
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) db[c] += g[r * cols + c];
      break;
    }
    case OpKind::Scale: {
      auto d = din(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += n.scalar * g[i];
      break;
    }
    case OpKind::Shift:
    case OpKind::Reshape:
      add_into(din(0).data(), g.data());
      break;
    case OpKind::Tanh: {
      auto d = din(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
      break;
    }
    case OpKind::Sigmoid: {
      auto d = din(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * y[i] * (1.0 - y[i]);
      break;
    }
    case OpKind::Exp: {
      auto d = din(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * y[i];
      break;
    }
    case OpKind::Log: {
      const Tensor& x = in(0);
      auto d = din(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] / x[i];
      break;
    }
    case OpKind::Softmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) dot += g[i] * y[i];
      auto d = din(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += y[i] * (g[i] - dot);
      break;
    }
    case OpKind::SegmentSoftmax: {
      std::vector<double> dot(n.count, 0.0);
      for (std::size_t i = 0; i < y.size(); ++i) dot[n.index[i]] += g[i] * y[i];
      auto d = din(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += y[i] * (g[i] - dot[n.index[i]]);
      break;
    }
    case OpKind::Sum:
    case OpKind::Mean: {
      auto d = din(0).data();
      const double gi = n.kind == OpKind::Sum ? g[0] : g[0] / static_cast<double>(d.size());
      for (auto& v : d) v += gi;
      break;
    }
    case OpKind::RowSum:
    case OpKind::RowMean: {
      auto d = din(0).data();
      const std::size_t cols = in(0).cols();
      const double f = n.kind == OpKind::RowSum ? 1.0 : 1.0 / static_cast<double>(cols);
      for (std::size_t r = 0; r < g.size(); ++r)
        for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += f * g[r];
      break;
    }
    case OpKind::Concat: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        auto d = din(static_cast<int>(k)).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[offset + i];
        offset += d.size();
      }
      break;
    }
    case OpKind::ConcatCols: {
      const std::size_t total = g.cols();
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        Tensor& d = din(static_cast<int>(k));
        const std::size_t w = d.cols();
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c) d[r * w + c] += g[r * total + offset + c];
        offset += w;
      }
      break;
    }
    case OpKind::SliceCols: {
      Tensor& d = din(0);
      const std::size_t total = d.cols(), w = g.cols(), begin = n.count;
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < w; ++c) d[r * total + begin + c] += g[r * w + c];
      break;
    }
    case OpKind::GatherRows: {
      if (!want(0)) break;
      Tensor& d = din(0);
      const std::size_t w = d.cols();
      for (std::size_t i = 0; i < n.index.size(); ++i) {
        double* dst = d.ptr() + static_cast<std::size_t>(n.index[i]) * w;
        const double* src = g.ptr() + i * w;
        for (std::size_t c = 0; c < w; ++c) dst[c] += src[c];
      }
      break;
    }
    case OpKind::GatherFlat: {
      Tensor& d = din(0);
      for (std::size_t i = 0; i < n.index.size(); ++i) d[n.index[i]] += g[i];
      break;
    }
    case OpKind::SegmentSum: {
      Tensor& d = din(0);
      const std::size_t w = d.cols();
      for (std::size_t i = 0; i < n.index.size(); ++i) {
        double* dst = d.ptr() + i * w;
        const double* src = g.ptr() + static_cast<std::size_t>(n.index[i]) * w;
        for (std::size_t c = 0; c < w; ++c) dst[c] += src[c];
      }
      break;
    }
    case OpKind::RowScale: {
      const Tensor& x = in(0);
      const Tensor& w = in(1);
      const std::size_t cols = x.cols();
      Tensor& dx = din(0);
      Tensor& dw = din(1);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          dx[r * cols + c] += w[r] * g[r * cols + c];
          acc += g[r * cols + c] * x[r * cols + c];
        }
        dw[r] += acc;
      }
      break;
    }
    case OpKind::RowDot: {
      const Tensor& a = in(0);
      const Tensor& b = in(1);
      const std::size_t cols = a.cols();
      Tensor& da = din(0);
      Tensor& db = din(1);
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          da[r * cols + c] += g[r] * b[r * cols + c];
          db[r * cols + c] += g[r] * a[r * cols + c];
        }
      break;
    }
    case OpKind::Dropout: {
      auto d = din(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * n.aux[i];
      break;
    }
    case OpKind::Transpose: {
      Tensor& d = din(0);
      const std::size_t rows = d.rows(), cols = d.cols();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += g[c * rows + r];
      break;
    }
    case OpKind::BinaryNll: {
      const Tensor& p = in(0);
      auto d = din(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (p[i] <= kProbabilityClamp || p[i] >= 1.0 - kProbabilityClamp) continue;
        const double r = n.aux[i];
        d[i] += g[i] * (-r / p[i] + (1.0 - r) / (1.0 - p[i]));
      }
      break;
    }
    case OpKind::BinaryNllLogits: {
      const Tensor& z = in(0);
      auto d = din(0).data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * (stable_sigmoid(z[i]) - n.aux[i]);
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Operations

struct OpBuilder {
  static Graph& graph_of(Var a) {
    if (!a) throw std::invalid_argument("operation on an empty variable");
    return *a.graph();
  }
  static Graph& graph_of(Var a, Var b) {
    if (a.graph() != b.graph()) throw std::invalid_argument("operands belong to different graphs");
    return graph_of(a);
  }
  static Var push(Graph& g, OpKind kind, std::vector<int> inputs, Tensor value) {
    Graph::Node n;
    n.kind = kind;
    n.inputs = std::move(inputs);
    n.owned = std::move(value);
    return g.push(std::move(n));
  }
  static Var push(Graph& g, Graph::Node n) { return g.push(std::move(n)); }
  static Graph::Node make(OpKind kind, std::vector<int> inputs, Tensor value) {
    Graph::Node n;
    n.kind = kind;
    n.inputs = std::move(inputs);
    n.owned = std::move(value);
    return n;
  }
};

namespace ops {

namespace {

template <class F>
Var unary(OpKind kind, Var x, F f) {
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  Tensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = f(v[i]);
  return OpBuilder::push(g, kind, {x.id()}, std::move(out));
}

template <class F>
Var binary_same_shape(OpKind kind, Var a, Var b, F f) {
  Graph& g = OpBuilder::graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (!x.same_shape(y)) shape_mismatch(op_name(kind), x, y);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i], y[i]);
  return OpBuilder::push(g, kind, {a.id(), b.id()}, std::move(out));
}

void check_segments(std::string_view op, std::span<const int> segment, std::size_t count,
                    std::size_t segments) {
  if (segment.size() != count) {
    throw ShapeError(std::string(op) + ": " + std::to_string(segment.size()) + " segment ids for " +
                     std::to_string(count) + " rows");
  }
  for (int s : segment) {
    if (s < 0 || static_cast<std::size_t>(s) >= segments)
      throw ShapeError(std::string(op) + ": segment id " + std::to_string(s) + " out of range");
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = OpBuilder::graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.rows()) shape_mismatch("matmul", x, y);
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  Tensor out({m, n});
  kernels::matmul(x.data(), y.data(), out.data(), m, k, n);
  return OpBuilder::push(g, OpKind::MatMul, {a.id(), b.id()}, std::move(out));
}

Var add(Var a, Var b) { return binary_same_shape(OpKind::Add, a, b, [](double x, double y) { return x + y; }); }
Var sub(Var a, Var b) { return binary_same_shape(OpKind::Sub, a, b, [](double x, double y) { return x - y; }); }
Var mul(Var a, Var b) { return binary_same_shape(OpKind::Mul, a, b, [](double x, double y) { return x * y; }); }

Var add_bias(Var x, Var bias) {
  Graph& g = OpBuilder::graph_of(x, bias);
  const Tensor& v = x.value();
  const Tensor& b = bias.value();
  if (v.rank() != 2 || b.rank() != 1 || b.size() != v.cols()) shape_mismatch("add_bias", v, b);
  Tensor out = v;
  const std::size_t cols = v.cols();
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += b[c];
  return OpBuilder::push(g, OpKind::AddBias, {x.id(), bias.id()}, std::move(out));
}

Var scale(Var x, double factor) {
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  Tensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = factor * v[i];
  auto node = OpBuilder::make(OpKind::Scale, {x.id()}, std::move(out));
  node.scalar = factor;
  return OpBuilder::push(g, std::move(node));
}

Var shift(Var x, double offset) {
  return unary(OpKind::Shift, x, [offset](double v) { return v + offset; });
}

Var tanh(Var x) { return unary(OpKind::Tanh, x, [](double v) { return std::tanh(v); }); }
Var sigmoid(Var x) { return unary(OpKind::Sigmoid, x, [](double v) { return stable_sigmoid(v); }); }
Var exp(Var x) { return unary(OpKind::Exp, x, [](double v) { return std::exp(v); }); }

Var log(Var x) {
  const Tensor& v = x.value();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw NumericError("log: non-positive input at entry " + std::to_string(i));
  }
  return unary(OpKind::Log, x, [](double v) { return std::log(v); });
}

Var softmax(Var x) {
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  if (v.rank() != 1) bad_shape("softmax", v, "a rank-1 tensor");
  const double mx = *std::max_element(v.data().begin(), v.data().end());
  Tensor out(v.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) z += (out[i] = std::exp(v[i] - mx));
  for (auto& e : out.data()) e /= z;
  return OpBuilder::push(g, OpKind::Softmax, {x.id()}, std::move(out));
}

Var segment_softmax(Var x, std::span<const int> segment, std::size_t segments) {
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  if (v.rank() != 1) bad_shape("segment_softmax", v, "a rank-1 tensor");
  check_segments("segment_softmax", segment, v.size(), segments);
  std::vector<double> mx(segments, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < v.size(); ++i) mx[segment[i]] = std::max(mx[segment[i]], v[i]);
  std::vector<double> z(segments, 0.0);
  Tensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) z[segment[i]] += (out[i] = std::exp(v[i] - mx[segment[i]]));
  for (std::size_t i = 0; i < v.size(); ++i) out[i] /= z[segment[i]];
  auto node = OpBuilder::make(OpKind::SegmentSoftmax, {x.id()}, std::move(out));
  node.index.assign(segment.begin(), segment.end());
  node.count = segments;
  return OpBuilder::push(g, std::move(node));
}

Var sum(Var x) {
  Graph& g = OpBuilder::graph_of(x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return OpBuilder::push(g, OpKind::Sum, {x.id()}, Tensor::scalar(s));
}

Var mean(Var x) {
  Graph& g = OpBuilder::graph_of(x);
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  return OpBuilder::push(g, OpKind::Mean, {x.id()}, Tensor::scalar(s / static_cast<double>(x.value().size())));
}

namespace {

Var row_reduce(OpKind kind, Var x) {
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  if (v.rank() != 2) bad_shape(op_name(kind), v, "a matrix");
  const std::size_t cols = v.cols();
  Tensor out({v.rows()});
  for (std::size_t r = 0; r < v.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += v[r * cols + c];
    out[r] = kind == OpKind::RowSum ? s : s / static_cast<double>(cols);
  }
  return OpBuilder::push(g, kind, {x.id()}, std::move(out));
}

}  // namespace

Var row_sum(Var x) { return row_reduce(OpKind::RowSum, x); }
Var row_mean(Var x) { return row_reduce(OpKind::RowMean, x); }

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Graph& g = OpBuilder::graph_of(parts[0]);
  std::vector<double> data;
  std::vector<int> inputs;
  for (const Var& p : parts) {
    OpBuilder::graph_of(parts[0], p);
    const Tensor& v = p.value();
    if (v.rank() != 1) bad_shape("concat", v, "rank-1 operands");
    data.insert(data.end(), v.data().begin(), v.data().end());
    inputs.push_back(p.id());
  }
  return OpBuilder::push(g, OpKind::Concat, std::move(inputs), Tensor::vector(std::move(data)));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Graph& g = OpBuilder::graph_of(parts[0]);
  const std::size_t rows = parts[0].value().rows();
  std::size_t total = 0;
  std::vector<int> inputs;
  for (const Var& p : parts) {
    OpBuilder::graph_of(parts[0], p);
    const Tensor& v = p.value();
    if (v.rank() != 2 || v.rows() != rows) shape_mismatch("concat_cols", parts[0].value(), v);
    total += v.cols();
    inputs.push_back(p.id());
  }
  Tensor out({rows, total});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    const std::size_t w = v.cols();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.ptr() + r * w, w, out.ptr() + r * total + offset);
    offset += w;
  }
  return OpBuilder::push(g, OpKind::ConcatCols, std::move(inputs), std::move(out));
}

Var slice_cols(Var x, std::size_t begin, std::size_t width) {
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  if (v.rank() != 2 || width == 0 || begin + width > v.cols())
    bad_shape("slice_cols", v, "a matrix with at least " + std::to_string(begin + width) + " columns");
  const std::size_t cols = v.cols();
  Tensor out({v.rows(), width});
  for (std::size_t r = 0; r < v.rows(); ++r) std::copy_n(v.ptr() + r * cols + begin, width, out.ptr() + r * width);
  auto node = OpBuilder::make(OpKind::SliceCols, {x.id()}, std::move(out));
  node.count = begin;
  return OpBuilder::push(g, std::move(node));
}

Var gather_rows(Var x, std::span<const int> rows) {
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  if (rows.empty()) throw ShapeError("gather_rows: empty index list");
  const std::size_t w = v.cols();
  Shape shape = v.shape();
  shape[0] = rows.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= v.rows())
      throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " out of range for " + v.shape_string());
    std::copy_n(v.ptr() + static_cast<std::size_t>(rows[i]) * w, w, out.ptr() + i * w);
  }
  auto node = OpBuilder::make(OpKind::GatherRows, {x.id()}, std::move(out));
  node.index.assign(rows.begin(), rows.end());
  return OpBuilder::push(g, std::move(node));
}

Var gather_flat(Var x, std::span<const int> flat) {
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  if (flat.empty()) throw ShapeError("gather_flat: empty index list");
  Tensor out({flat.size()});
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (flat[i] < 0 || static_cast<std::size_t>(flat[i]) >= v.size())
      throw ShapeError("gather_flat: index " + std::to_string(flat[i]) + " out of range for " + v.shape_string());
    out[i] = v[flat[i]];
  }
  auto node = OpBuilder::make(OpKind::GatherFlat, {x.id()}, std::move(out));
  node.index.assign(flat.begin(), flat.end());
  return OpBuilder::push(g, std::move(node));
}

Var segment_sum(Var x, std::span<const int> segment, std::size_t segments) {
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  check_segments("segment_sum", segment, v.rows(), segments);
  const std::size_t w = v.cols();
  Shape shape = v.shape();
  shape[0] = segments;
  Tensor out(shape);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    double* dst = out.ptr() + static_cast<std::size_t>(segment[i]) * w;
    const double* src = v.ptr() + i * w;
    for (std::size_t c = 0; c < w; ++c) dst[c] += src[c];
  }
  auto node = OpBuilder::make(OpKind::SegmentSum, {x.id()}, std::move(out));
  node.index.assign(segment.begin(), segment.end());
  node.count = segments;
  return OpBuilder::push(g, std::move(node));
}

Var row_scale(Var x, Var w) {
  Graph& g = OpBuilder::graph_of(x, w);
  const Tensor& v = x.value();
  const Tensor& s = w.value();
  if (v.rank() != 2 || s.rank() != 1 || s.size() != v.rows()) shape_mismatch("row_scale", v, s);
  const std::size_t cols = v.cols();
  Tensor out(v.shape());
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = s[r] * v[r * cols + c];
  return OpBuilder::push(g, OpKind::RowScale, {x.id(), w.id()}, std::move(out));
}

Var row_dot(Var a, Var b) {
  Graph& g = OpBuilder::graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 2 || !x.same_shape(y)) shape_mismatch("row_dot", x, y);
  const std::size_t cols = x.cols();
  Tensor out({x.rows()});
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += x[r * cols + c] * y[r * cols + c];
    out[r] = s;
  }
  return OpBuilder::push(g, OpKind::RowDot, {a.id(), b.id()}, std::move(out));
}

Var dropout(Var x, double rate, Mode mode, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  if (mode == Mode::Infer || rate == 0.0) return x;
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  const double keep = 1.0 - rate;
  Tensor mask(v.shape());
  Tensor out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    mask[i] = uniform01(rng) < keep ? 1.0 / keep : 0.0;
    out[i] = v[i] * mask[i];
  }
  auto node = OpBuilder::make(OpKind::Dropout, {x.id()}, std::move(out));
  node.aux = std::move(mask);
  return OpBuilder::push(g, std::move(node));
}

Var reshape(Var x, Shape shape) {
  Graph& g = OpBuilder::graph_of(x);
  return OpBuilder::push(g, OpKind::Reshape, {x.id()}, x.value().reshaped(std::move(shape)));
}

Var transpose(Var x) {
  Graph& g = OpBuilder::graph_of(x);
  const Tensor& v = x.value();
  if (v.rank() != 2) bad_shape("transpose", v, "a matrix");
  const std::size_t rows = v.rows(), cols = v.cols();
  Tensor out({cols, rows});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = v[r * cols + c];
  return OpBuilder::push(g, OpKind::Transpose, {x.id()}, std::move(out));
}

namespace {

Tensor label_tensor(std::string_view op, const Tensor& v, std::span<const double> labels) {
  if (labels.size() != v.size()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(labels.size()) + " labels for shape " +
                     v.shape_string());
  }
  return Tensor(v.shape(), std::vector<double>(labels.begin(), labels.end()));
}

}  // namespace

Var binary_nll(Var probability, std::span<const double> labels) {
  Graph& g = OpBuilder::graph_of(probability);
  const Tensor& p = probability.value();
  Tensor r = label_tensor("binary_nll", p, labels);
  Tensor out(p.shape());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    out[i] = -(r[i] * std::log(q) + (1.0 - r[i]) * std::log(1.0 - q));
  }
  auto node = OpBuilder::make(OpKind::BinaryNll, {probability.id()}, std::move(out));
  node.aux = std::move(r);
  return OpBuilder::push(g, std::move(node));
}

Var binary_nll_logits(Var logits, std::span<const double> labels) {
  Graph& g = OpBuilder::graph_of(logits);
  const Tensor& z = logits.value();
  Tensor r = label_tensor("binary_nll_logits", z, labels);
  Tensor out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = softplus(z[i]) - r[i] * z[i];
  auto node = OpBuilder::make(OpKind::BinaryNllLogits, {logits.id()}, std::move(out));
  node.aux = std::move(r);
  return OpBuilder::push(g, std::move(node));
}

}  // namespace ops

// ---------------------------------------------------------------------------
// Gradient checking

namespace {

double evaluate(const GraphBuilder& build) {
  Graph g;
  return build(g).item();
}

}  // namespace

GradCheckReport grad_check(ParameterSet& params, const GraphBuilder& build, const GradCheckOptions& options) {
  params.zero_grad();
  {
    Graph g;
    Var root = build(g);
    g.backward(root);
  }
  GradCheckReport report;
  Rng sampler(options.sample_seed);
  for (Parameter& p : params) {
    if (!p.trainable) continue;
    std::vector<std::size_t> entries(p.value.size());
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = i;
    if (options.max_entries_per_parameter && entries.size() > options.max_entries_per_parameter) {
      shuffle(std::span(entries), sampler);
      entries.resize(options.max_entries_per_parameter);
    }
    for (std::size_t i : entries) {
      const double original = p.value[i];
      p.value[i] = original + options.step;
      double up = 0.0, down = 0.0;
      try {
        up = evaluate(build);
        p.value[i] = original - options.step;
        down = evaluate(build);
      } catch (const NumericError& e) {
        p.value[i] = original;
        throw NumericError("grad_check: non-finite value probing " + p.name + "[" + std::to_string(i) +
                           "]: " + e.what());
      }
      p.value[i] = original;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("grad_check: non-finite value probing " + p.name + "[" + std::to_string(i) + "]");
      }
      const double numeric = (up - down) / (2.0 * options.step);
      const double analytic = p.grad[i];
      const double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      ++report.checked;
      if (report.checked == 1 || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_parameter = p.name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

GradCheckReport grad_check(const SeededGraphSetup& setup, std::uint64_t seed, const GradCheckOptions& options) {
  ParameterSet params;
  Rng rng(seed);
  GraphBuilder build = setup(params, rng);
  return grad_check(params, build, options);
}

}  // namespace dirt
