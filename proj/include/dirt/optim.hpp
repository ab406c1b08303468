#pragma once

#include <cstdint>
#include <vector>

#include "dirt/autodiff.hpp"
#include "dirt/random.hpp"
#include "dirt/tensor.hpp"

namespace dirt {

/// Uniform samples in (-sqrt(6 / (n_in + n_out)), +sqrt(6 / (n_in + n_out))),
/// with n_in, n_out the last two extents (a vector has n_out = 1).
Tensor glorot_uniform(const Shape& shape, Rng& rng);
Tensor glorot_uniform(const Shape& shape, std::uint64_t seed);
double glorot_limit(const Shape& shape);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction over every trainable parameter of a set.
class Adam {
 public:
  Adam(ParameterSet& params, AdamConfig config);

  /// Applies one update from Parameter::grad. Throws NumericError naming the
  /// parameter if a gradient or updated value is not finite.
  void step();

  long steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }
  /// First and second moment estimates, in parameter order.
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

 private:
  ParameterSet& params_;
  AdamConfig config_;
  std::vector<Parameter*> targets_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  long t_ = 0;
};

}  // namespace dirt
