#pragma once

#include <cstdint>
#include <vector>

#include "signrec/nn/layers.hpp"

namespace signrec::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // L2 coefficient
  double dropout = 0.0;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 20;
  double clip_norm = 5.0;  // <= 0 disables clipping
  std::uint64_t seed = 7;

  // Throws ConfigError when a field is out of range.
  void validate() const;
};

// Adds weight_decay * w to the gradient of every trainable parameter.
template <typename Real>
void add_l2_gradient(const ParamRefs<Real>& params, double weight_decay);

// Rescales all trainable gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename Real>
double clip_global_norm(const ParamRefs<Real>& params, double max_norm);

template <typename Real>
void zero_grads(const ParamRefs<Real>& params);

// Adam with bias correction. Gradients are clipped by global norm before the
// moment update. step_index counts from 1.
template <typename Real>
class Adam {
 public:
  explicit Adam(const TrainConfig& config) : config_(config) {}

  void step(const ParamRefs<Real>& params, std::size_t step_index);

  // Moment buffers, exposed for checkpointing and tests.
  const std::vector<std::vector<double>>& first_moments() const { return m_; }

 private:
  TrainConfig config_;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace signrec::nn
