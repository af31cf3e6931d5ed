#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "signrec/nn/tensor.hpp"
#include "signrec/rng.hpp"

namespace signrec::nn {

enum class Mode { Train, Infer };

// One named parameter tensor and its gradient accumulator.
template <typename Real>
struct Param {
  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;
  bool trainable = true;

  Param() = default;
  Param(std::string n, Tensor<Real> v, bool train = true)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()), trainable(train) {}

  void zero_grad() { grad.fill(Real(0)); }
};

template <typename Real>
using ParamRefs = std::vector<Param<Real>*>;

// Glorot-uniform fill: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename Real>
void glorot_uniform(Tensor<Real>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

enum class Padding { Same, Valid };

// Output extent for one spatial axis.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, Padding pad);

// 2-D cross-correlation over a stack of images [N, C_in, H, W].
template <typename Real>
class Conv2d {
 public:
  Conv2d(const std::string& name, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel, std::size_t stride, Padding padding, Rng& init);

  Tensor<Real> forward(const Tensor<Real>& input);
  Tensor<Real> backward(const Tensor<Real>& grad_out);

  ParamRefs<Real> params() { return {&weight, &bias}; }
  Shape output_shape(const Shape& input) const;

  Param<Real> weight;  // [C_out, C_in, K, K]
  Param<Real> bias;    // [C_out]

 private:
  struct Geometry {
    std::size_t c_in, h, w, h_out, w_out, pad_top, pad_left;
  };
  Geometry geometry(const Shape& input) const;
  void im2col(const Real* image, const Geometry& g, Real* col) const;
  void col2im(const Real* col, const Geometry& g, Real* image) const;

  std::size_t in_channels_, out_channels_, kernel_, stride_;
  Padding padding_;
  std::optional<Tensor<Real>> input_;
};

// Per-channel batch normalisation. Rank-4 inputs [N, C, H, W] normalise over
// N, H, W; rank-2 inputs [R, C] normalise over R.
template <typename Real>
class BatchNorm {
 public:
  BatchNorm(const std::string& name, std::size_t channels, double momentum = 0.9,
            double epsilon = 1e-5);

  Tensor<Real> forward(const Tensor<Real>& input, Mode mode);
  Tensor<Real> backward(const Tensor<Real>& grad_out);

  ParamRefs<Real> params() { return {&scale, &shift, &running_mean, &running_var}; }

  Param<Real> scale;
  Param<Real> shift;
  Param<Real> running_mean;  // not trainable
  Param<Real> running_var;   // not trainable

 private:
  std::size_t channels_;
  double momentum_, epsilon_;
  Mode mode_ = Mode::Infer;
  std::optional<Tensor<Real>> normalized_;
  std::vector<Real> inv_std_;
};

template <typename Real>
class Relu {
 public:
  Tensor<Real> forward(const Tensor<Real>& input);
  Tensor<Real> backward(const Tensor<Real>& grad_out);

 private:
  std::optional<Tensor<Real>> input_;
};

// Max pooling over [N, C, H, W] with floor output extents.
template <typename Real>
class MaxPool2d {
 public:
  MaxPool2d(std::size_t window, std::size_t stride) : window_(window), stride_(stride) {}

  Tensor<Real> forward(const Tensor<Real>& input);
  Tensor<Real> backward(const Tensor<Real>& grad_out);
  Shape output_shape(const Shape& input) const;

 private:
  std::size_t window_, stride_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

// Affine map applied row-wise: [R, N] -> [R, M]; a rank-1 [N] input yields [M].
template <typename Real>
class Dense {
 public:
  Dense(const std::string& name, std::size_t in_features, std::size_t out_features, Rng& init);

  Tensor<Real> forward(const Tensor<Real>& input);
  Tensor<Real> backward(const Tensor<Real>& grad_out);

  ParamRefs<Real> params() { return {&weight, &bias}; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }

  Param<Real> weight;  // [M, N]
  Param<Real> bias;    // [M]

 private:
  std::size_t in_, out_;
  std::optional<Tensor<Real>> input_;
};

// Inverted dropout: survivors are scaled by 1/(1-rate) at train time, so
// inference is the identity.
template <typename Real>
class Dropout {
 public:
  explicit Dropout(double rate);

  Tensor<Real> forward(const Tensor<Real>& input, Mode mode, Rng& rng);
  Tensor<Real> backward(const Tensor<Real>& grad_out);
  double rate() const { return rate_; }

 private:
  double rate_;
  std::optional<std::vector<Real>> mask_;
  bool passthrough_ = true;
  bool ran_ = false;
};

// Packed variable-length sequences: rows of `data` are the concatenation of
// every sequence, `lengths` gives each sequence's row count.
struct SeqLayout {
  std::vector<std::size_t> lengths;

  std::size_t total() const;
  std::size_t offset(std::size_t seq) const;
  static SeqLayout single(std::size_t length) { return SeqLayout{{length}}; }
};

// Unidirectional LSTM, gate order (input, forget, candidate, output).
template <typename Real>
class Lstm {
 public:
  Lstm(const std::string& name, std::size_t input_size, std::size_t hidden_size, Rng& init);

  // Every hidden state of every packed sequence: [sum T, H].
  Tensor<Real> forward(const Tensor<Real>& input, const SeqLayout& layout);
  Tensor<Real> backward(const Tensor<Real>& grad_out);

  // Single sequence [T, N]; returns [T, H] or, when return_all is false, the
  // final hidden state [H]. Backward accepts the matching gradient shape.
  Tensor<Real> forward_sequence(const Tensor<Real>& input, bool return_all);
  Tensor<Real> backward_sequence(const Tensor<Real>& grad_out);

  ParamRefs<Real> params() { return {&kernel, &recurrent, &bias}; }
  std::size_t input_size() const { return input_size_; }
  std::size_t hidden_size() const { return hidden_; }

  Param<Real> kernel;     // [N, 4H]
  Param<Real> recurrent;  // [H, 4H]
  Param<Real> bias;       // [4H]

 private:
  std::size_t input_size_, hidden_;
  std::optional<Tensor<Real>> input_;
  SeqLayout layout_;
  Tensor<Real> gates_, cells_, hidden_states_, cell_tanh_;
  bool last_only_ = false;
};

// Forward LSTM and time-reversed LSTM, concatenated per step: [sum T, 2H].
template <typename Real>
class BiLstm {
 public:
  BiLstm(const std::string& name, std::size_t input_size, std::size_t hidden_size, Rng& init);

  Tensor<Real> forward(const Tensor<Real>& input, const SeqLayout& layout);
  Tensor<Real> backward(const Tensor<Real>& grad_out);

  ParamRefs<Real> params();
  std::size_t hidden_size() const { return forward_.hidden_size(); }

  Lstm<Real>& forward_lstm() { return forward_; }
  Lstm<Real>& backward_lstm() { return backward_; }

 private:
  Lstm<Real> forward_, backward_;
  SeqLayout layout_;
  bool ran_ = false;
};

// Reverses each packed sequence in time.
template <typename Real>
Tensor<Real> reverse_sequences(const Tensor<Real>& packed, const SeqLayout& layout);

// Column concatenation of row-aligned tensors [R, a], [R, b], ... -> [R, a+b+...].
template <typename Real>
Tensor<Real> concat_columns(const std::vector<const Tensor<Real>*>& parts);

// Inverse of concat_columns for gradients.
template <typename Real>
std::vector<Tensor<Real>> split_columns(const Tensor<Real>& whole,
                                        const std::vector<std::size_t>& widths);

// Row-wise softmax with max subtraction; rows sum to one.
template <typename Real>
Tensor<Real> softmax_rows(const Tensor<Real>& logits);

template <typename Real>
Tensor<Real> log_softmax_rows(const Tensor<Real>& logits);

}  // namespace signrec::nn
