#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "signrec/ctc/ctc.hpp"
#include "signrec/data/batch.hpp"
#include "signrec/models/config.hpp"
#include "signrec/nn/layers.hpp"
#include "signrec/rng.hpp"

namespace signrec::models {

// A network mapping a batch to per-frame CTC scores. Layers cache their
// activations, so one instance serves one caller at a time.
template <typename Real>
class Model {
 public:
  virtual ~Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }

  // One sequence per sample with exactly input_lengths[i] rows of V+1 scores.
  // Throws InputError when the batch holds the wrong input kind.
  virtual std::vector<ctc::LogitSequence<Real>> forward(const data::Batch& batch, nn::Mode mode) = 0;

  // grads[i] = d loss / d scores of sample i of the last forward. Accumulates
  // into the parameter gradients.
  virtual void backward(const std::vector<nn::Tensor<Real>>& grads) = 0;

  // Every tensor (trainable or not) in declaration order.
  const nn::ParamRefs<Real>& params() const { return params_; }
  nn::ParamRefs<Real> trainable_params() const;
  std::size_t parameter_count(bool trainable_only = true) const;

  // Drives dropout masks.
  Rng& rng() { return rng_; }

 protected:
  Model(ModelConfig config, std::uint64_t seed);
  void check_batch(const data::Batch& batch) const;

  ModelConfig config_;
  Rng rng_;
  nn::ParamRefs<Real> params_;
};

template <typename Real>
std::unique_ptr<Model<Real>> build_rsign_c(const ModelConfig& config, std::uint64_t seed);

template <typename Real>
std::unique_ptr<Model<Real>> build_mcsign_c(const ModelConfig& config, std::uint64_t seed);

// Dispatches on config.architecture.
template <typename Real>
std::unique_ptr<Model<Real>> build_model(const ModelConfig& config, std::uint64_t seed);

// Adapts a model to the evaluator: infer-mode forward, cast to float.
template <typename Real>
std::vector<ctc::LogitSequence<float>> infer_logits(Model<Real>& model, const data::Batch& batch);

// Internal building blocks shared by both architectures.
namespace detail {

// Time-distributed conv blocks followed by a flatten: [N, C, S, S] -> [N, F].
template <typename Real>
class ConvStack {
 public:
  ConvStack(const std::string& name, std::size_t side, const std::vector<ConvBlock>& blocks, Rng& init);

  nn::Tensor<Real> forward(const nn::Tensor<Real>& images, nn::Mode mode);
  nn::Tensor<Real> backward(const nn::Tensor<Real>& grad);
  void collect(nn::ParamRefs<Real>& out);

 private:
  struct Block {
    std::unique_ptr<nn::Conv2d<Real>> conv;
    std::unique_ptr<nn::BatchNorm<Real>> norm;
    nn::Relu<Real> relu;
    std::unique_ptr<nn::MaxPool2d<Real>> pool;
  };
  std::vector<Block> blocks_;
  nn::Shape pre_flatten_;
};

// Concatenates the valid rows of a padded [B, T_pad, ...] tensor: [sum T_i, ...].
template <typename Real>
nn::Tensor<Real> pack_valid(const nn::Tensor<float>& padded, const std::vector<std::size_t>& lengths);

// Splits packed [sum T_i, K] scores into per-sample sequences.
template <typename Real>
std::vector<ctc::LogitSequence<Real>> unpack_logits(const nn::Tensor<Real>& packed,
                                                    const std::vector<std::size_t>& lengths);

// Inverse of unpack_logits for gradients.
template <typename Real>
nn::Tensor<Real> pack_grads(const std::vector<nn::Tensor<Real>>& grads, const std::vector<std::size_t>& lengths);

template <typename Real>
void append(nn::ParamRefs<Real>& out, const nn::ParamRefs<Real>& more) {
  out.insert(out.end(), more.begin(), more.end());
}

}  // namespace detail

}  // namespace signrec::models
