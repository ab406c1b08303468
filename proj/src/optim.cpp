#include "dirt/optim.hpp"

#include <cmath>

#include "dirt/errors.hpp"

namespace dirt {

double glorot_limit(const Shape& shape) {
  if (shape.empty()) throw ShapeError("glorot_uniform: shape must have at least one extent");
  const double n_in = static_cast<double>(shape.size() >= 2 ? shape[shape.size() - 2] : shape[0]);
  const double n_out = static_cast<double>(shape.size() >= 2 ? shape.back() : 1);
  return std::sqrt(6.0 / (n_in + n_out));
}

Tensor glorot_uniform(const Shape& shape, Rng& rng) {
  const double limit = glorot_limit(shape);
  Tensor t(shape);
  for (auto& v : t.data()) {
    do {
      v = uniform(rng, -limit, limit);
    } while (v == -limit);
  }
  return t;
}

Tensor glorot_uniform(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  return glorot_uniform(shape, rng);
}

Adam::Adam(ParameterSet& params, AdamConfig config) : params_(params), config_(config) {
  if (!(config_.learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be positive");
  for (Parameter& p : params_) {
    if (!p.trainable) continue;
    targets_.push_back(&p);
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

void Adam::step() {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < targets_.size(); ++k) {
    Parameter& p = *targets_[k];
    if (!p.grad.same_shape(p.value)) p.grad = Tensor(p.value.shape());
    if (!p.grad.all_finite()) throw NumericError("adam: non-finite gradient in parameter '" + p.name + "'");
    auto m = m_[k].data();
    auto v = v_[k].data();
    auto w = p.value.data();
    auto g = p.grad.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
    if (!p.value.all_finite()) throw NumericError("adam: update made parameter '" + p.name + "' non-finite");
  }
}

}  // namespace dirt
