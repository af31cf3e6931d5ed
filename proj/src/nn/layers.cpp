#include "signrec/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eigen_maps.hpp"

namespace signrec::nn {

using detail::ConstMatMap;
using detail::ConstRowVecMap;
using detail::MatMap;
using detail::RowVecMap;

namespace {

template <typename Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

void require_rank(const Shape& s, std::size_t rank, const char* op) {
  if (s.size() != rank) {
    throw DimensionError(std::string(op) + " expects a rank-" + std::to_string(rank) +
                         " tensor, got " + shape_str(s));
  }
}

}  // namespace

template <typename Real>
void glorot_uniform(Tensor<Real>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.data()) v = static_cast<Real>(rng.uniform(-a, a));
}

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, Padding pad) {
  if (stride == 0) throw ConfigError("stride must be positive");
  if (pad == Padding::Same) return (in + stride - 1) / stride;
  if (kernel > in) {
    throw DimensionError("kernel extent " + std::to_string(kernel) + " exceeds input extent " +
                         std::to_string(in));
  }
  return (in - kernel) / stride + 1;
}

// ---------------------------------------------------------------- Conv2d

template <typename Real>
Conv2d<Real>::Conv2d(const std::string& name, std::size_t in_channels, std::size_t out_channels,
                     std::size_t kernel, std::size_t stride, Padding padding, Rng& init)
    : weight(name + ".weight", Tensor<Real>({out_channels, in_channels, kernel, kernel})),
      bias(name + ".bias", Tensor<Real>({out_channels})),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding) {
  const std::size_t area = kernel * kernel;
  glorot_uniform(weight.value, in_channels * area, out_channels * area, init);
}

template <typename Real>
typename Conv2d<Real>::Geometry Conv2d<Real>::geometry(const Shape& input) const {
  require_rank(input, 4, "conv2d");
  if (input[1] != in_channels_) {
    throw DimensionError("conv2d expects " + std::to_string(in_channels_) +
                         " input channels, got shape " + shape_str(input));
  }
  Geometry g{};
  g.c_in = input[1];
  g.h = input[2];
  g.w = input[3];
  g.h_out = conv_out_extent(g.h, kernel_, stride_, padding_);
  g.w_out = conv_out_extent(g.w, kernel_, stride_, padding_);
  if (padding_ == Padding::Same) {
    const auto pad_total = [&](std::size_t in, std::size_t out) {
      const std::size_t need = (out - 1) * stride_ + kernel_;
      return need > in ? need - in : std::size_t{0};
    };
    g.pad_top = pad_total(g.h, g.h_out) / 2;
    g.pad_left = pad_total(g.w, g.w_out) / 2;
  }
  return g;
}

template <typename Real>
Shape Conv2d<Real>::output_shape(const Shape& input) const {
  const auto g = geometry(input);
  return {input[0], out_channels_, g.h_out, g.w_out};
}

template <typename Real>
void Conv2d<Real>::im2col(const Real* image, const Geometry& g, Real* col) const {
  const std::size_t plane = g.h_out * g.w_out;
  for (std::size_t c = 0; c < g.c_in; ++c) {
    const Real* src = image + c * g.h * g.w;
    for (std::size_t ky = 0; ky < kernel_; ++ky) {
      for (std::size_t kx = 0; kx < kernel_; ++kx) {
        Real* dst = col + ((c * kernel_ + ky) * kernel_ + kx) * plane;
        for (std::size_t oy = 0; oy < g.h_out; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                          static_cast<std::ptrdiff_t>(g.pad_top);
          Real* drow = dst + oy * g.w_out;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
            std::fill(drow, drow + g.w_out, Real(0));
            continue;
          }
          const Real* srow = src + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.w_out; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                            static_cast<std::ptrdiff_t>(g.pad_left);
            drow[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w))
                           ? Real(0)
                           : srow[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

template <typename Real>
void Conv2d<Real>::col2im(const Real* col, const Geometry& g, Real* image) const {
  const std::size_t plane = g.h_out * g.w_out;
  for (std::size_t c = 0; c < g.c_in; ++c) {
    Real* dst = image + c * g.h * g.w;
    for (std::size_t ky = 0; ky < kernel_; ++ky) {
      for (std::size_t kx = 0; kx < kernel_; ++kx) {
        const Real* src = col + ((c * kernel_ + ky) * kernel_ + kx) * plane;
        for (std::size_t oy = 0; oy < g.h_out; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                          static_cast<std::ptrdiff_t>(g.pad_top);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          Real* drow = dst + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.w_out; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                            static_cast<std::ptrdiff_t>(g.pad_left);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            drow[static_cast<std::size_t>(ix)] += src[oy * g.w_out + ox];
          }
        }
      }
    }
  }
}

template <typename Real>
Tensor<Real> Conv2d<Real>::forward(const Tensor<Real>& input) {
  const auto g = geometry(input.shape());
  const std::size_t n = input.dim(0);
  const std::size_t patch = g.c_in * kernel_ * kernel_;
  const std::size_t plane = g.h_out * g.w_out;
  Tensor<Real> out({n, out_channels_, g.h_out, g.w_out});
  std::vector<Real> col(patch * plane);
  ConstMatMap<Real> w(weight.value.ptr(), out_channels_, patch);
  ConstMatMap<Real> colm(col.data(), patch, plane);
  for (std::size_t i = 0; i < n; ++i) {
    im2col(input.row(i), g, col.data());
    MatMap<Real> o(out.row(i), out_channels_, plane);
    o.noalias() = w * colm;
    for (std::size_t c = 0; c < out_channels_; ++c) o.row(c).array() += bias.value[c];
  }
  input_ = input;
  return out;
}

template <typename Real>
Tensor<Real> Conv2d<Real>::backward(const Tensor<Real>& grad_out) {
  if (!input_) throw StateError("conv2d backward called before forward");
  const auto& input = *input_;
  const auto g = geometry(input.shape());
  const std::size_t n = input.dim(0);
  const std::size_t patch = g.c_in * kernel_ * kernel_;
  const std::size_t plane = g.h_out * g.w_out;
  if (grad_out.shape() != Shape{n, out_channels_, g.h_out, g.w_out}) {
    throw DimensionError("conv2d backward: gradient shape " + shape_str(grad_out.shape()));
  }
  Tensor<Real> grad_in(input.shape());
  std::vector<Real> col(patch * plane);
  std::vector<Real> dcol(patch * plane);
  ConstMatMap<Real> w(weight.value.ptr(), out_channels_, patch);
  MatMap<Real> dw(weight.grad.ptr(), out_channels_, patch);
  MatMap<Real> colm(col.data(), patch, plane);
  MatMap<Real> dcolm(dcol.data(), patch, plane);
  for (std::size_t i = 0; i < n; ++i) {
    ConstMatMap<Real> go(grad_out.row(i), out_channels_, plane);
    im2col(input.row(i), g, col.data());
    dw.noalias() += go * colm.transpose();
    for (std::size_t c = 0; c < out_channels_; ++c) bias.grad[c] += go.row(c).sum();
    dcolm.noalias() = w.transpose() * go;
    col2im(dcol.data(), g, grad_in.row(i));
  }
  return grad_in;
}

// ---------------------------------------------------------------- BatchNorm

template <typename Real>
BatchNorm<Real>::BatchNorm(const std::string& name, std::size_t channels, double momentum,
                           double epsilon)
    : scale(name + ".scale", Tensor<Real>({channels}, Real(1))),
      shift(name + ".shift", Tensor<Real>({channels})),
      running_mean(name + ".running_mean", Tensor<Real>({channels}), false),
      running_var(name + ".running_var", Tensor<Real>({channels}, Real(1)), false),
      channels_(channels),
      momentum_(momentum),
      epsilon_(epsilon) {}

namespace {

// Splits a BN input into (outer, channels, inner) so element (o, c, i) lives
// at (o * C + c) * inner + i.
struct BnLayout {
  std::size_t outer, channels, inner;
};

BnLayout bn_layout(const Shape& s, std::size_t channels) {
  if (s.size() == 2 && s[1] == channels) return {s[0], s[1], 1};
  if (s.size() == 4 && s[1] == channels) return {s[0], s[1], s[2] * s[3]};
  throw DimensionError("batch_norm over " + std::to_string(channels) +
                       " channels cannot take shape " + shape_str(s));
}

}  // namespace

template <typename Real>
Tensor<Real> BatchNorm<Real>::forward(const Tensor<Real>& input, Mode mode) {
  const auto lay = bn_layout(input.shape(), channels_);
  const double count = static_cast<double>(lay.outer * lay.inner);
  Tensor<Real> out(input.shape());
  Tensor<Real> xhat(input.shape());
  inv_std_.assign(channels_, Real(0));
  for (std::size_t c = 0; c < channels_; ++c) {
    double mean = 0.0, var = 0.0;
    if (mode == Mode::Train) {
      for (std::size_t o = 0; o < lay.outer; ++o) {
        const Real* p = input.ptr() + (o * lay.channels + c) * lay.inner;
        for (std::size_t i = 0; i < lay.inner; ++i) mean += p[i];
      }
      mean /= count;
      for (std::size_t o = 0; o < lay.outer; ++o) {
        const Real* p = input.ptr() + (o * lay.channels + c) * lay.inner;
        for (std::size_t i = 0; i < lay.inner; ++i) {
          const double d = p[i] - mean;
          var += d * d;
        }
      }
      var /= count;
      running_mean.value[c] =
          static_cast<Real>(momentum_ * running_mean.value[c] + (1.0 - momentum_) * mean);
      running_var.value[c] =
          static_cast<Real>(momentum_ * running_var.value[c] + (1.0 - momentum_) * var);
    } else {
      mean = running_mean.value[c];
      var = running_var.value[c];
    }
    const double inv = 1.0 / std::sqrt(var + epsilon_);
    inv_std_[c] = static_cast<Real>(inv);
    const Real gamma = scale.value[c];
    const Real beta = shift.value[c];
    for (std::size_t o = 0; o < lay.outer; ++o) {
      const std::size_t base = (o * lay.channels + c) * lay.inner;
      for (std::size_t i = 0; i < lay.inner; ++i) {
        const Real xh = static_cast<Real>((input[base + i] - mean) * inv);
        xhat[base + i] = xh;
        out[base + i] = gamma * xh + beta;
      }
    }
  }
  mode_ = mode;
  normalized_ = std::move(xhat);
  return out;
}

template <typename Real>
Tensor<Real> BatchNorm<Real>::backward(const Tensor<Real>& grad_out) {
  if (!normalized_) throw StateError("batch_norm backward called before forward");
  const auto& xhat = *normalized_;
  if (grad_out.shape() != xhat.shape()) {
    throw DimensionError("batch_norm backward: gradient shape " + shape_str(grad_out.shape()));
  }
  const auto lay = bn_layout(xhat.shape(), channels_);
  const double count = static_cast<double>(lay.outer * lay.inner);
  Tensor<Real> grad_in(xhat.shape());
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t o = 0; o < lay.outer; ++o) {
      const std::size_t base = (o * lay.channels + c) * lay.inner;
      for (std::size_t i = 0; i < lay.inner; ++i) {
        sum_dy += grad_out[base + i];
        sum_dy_xhat += static_cast<double>(grad_out[base + i]) * xhat[base + i];
      }
    }
    shift.grad[c] += static_cast<Real>(sum_dy);
    scale.grad[c] += static_cast<Real>(sum_dy_xhat);
    const double g = static_cast<double>(scale.value[c]) * inv_std_[c];
    for (std::size_t o = 0; o < lay.outer; ++o) {
      const std::size_t base = (o * lay.channels + c) * lay.inner;
      for (std::size_t i = 0; i < lay.inner; ++i) {
        if (mode_ == Mode::Train) {
          grad_in[base + i] = static_cast<Real>(
              g * (grad_out[base + i] - sum_dy / count - xhat[base + i] * sum_dy_xhat / count));
        } else {
          grad_in[base + i] = static_cast<Real>(g * grad_out[base + i]);
        }
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------- Relu

template <typename Real>
Tensor<Real> Relu<Real>::forward(const Tensor<Real>& input) {
  Tensor<Real> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > Real(0) ? input[i] : Real(0);
  input_ = input;
  return out;
}

template <typename Real>
Tensor<Real> Relu<Real>::backward(const Tensor<Real>& grad_out) {
  if (!input_) throw StateError("relu backward called before forward");
  if (grad_out.shape() != input_->shape()) {
    throw DimensionError("relu backward: gradient shape " + shape_str(grad_out.shape()));
  }
  Tensor<Real> grad_in(grad_out.shape());
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad_in[i] = (*input_)[i] > Real(0) ? grad_out[i] : Real(0);
  }
  return grad_in;
}

// ---------------------------------------------------------------- MaxPool2d

template <typename Real>
Shape MaxPool2d<Real>::output_shape(const Shape& input) const {
  require_rank(input, 4, "max_pool2d");
  if (window_ == 0 || stride_ == 0) throw ConfigError("pool window and stride must be positive");
  if (window_ > input[2] || window_ > input[3]) {
    throw DimensionError("pool window " + std::to_string(window_) + " larger than input " +
                         shape_str(input));
  }
  return {input[0], input[1], (input[2] - window_) / stride_ + 1,
          (input[3] - window_) / stride_ + 1};
}

template <typename Real>
Tensor<Real> MaxPool2d<Real>::forward(const Tensor<Real>& input) {
  const Shape os = output_shape(input.shape());
  Tensor<Real> out(os);
  argmax_.assign(out.size(), 0);
  const std::size_t h = input.dim(2), w = input.dim(3);
  const std::size_t planes = os[0] * os[1];
  std::size_t k = 0;
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t base = p * h * w;
    for (std::size_t oy = 0; oy < os[2]; ++oy) {
      for (std::size_t ox = 0; ox < os[3]; ++ox, ++k) {
        std::size_t best = base + oy * stride_ * w + ox * stride_;
        for (std::size_t dy = 0; dy < window_; ++dy) {
          for (std::size_t dx = 0; dx < window_; ++dx) {
            const std::size_t idx = base + (oy * stride_ + dy) * w + ox * stride_ + dx;
            if (input[idx] > input[best]) best = idx;
          }
        }
        out[k] = input[best];
        argmax_[k] = best;
      }
    }
  }
  input_shape_ = input.shape();
  return out;
}

template <typename Real>
Tensor<Real> MaxPool2d<Real>::backward(const Tensor<Real>& grad_out) {
  if (input_shape_.empty()) throw StateError("max_pool2d backward called before forward");
  if (grad_out.size() != argmax_.size()) {
    throw DimensionError("max_pool2d backward: gradient shape " + shape_str(grad_out.shape()));
  }
  Tensor<Real> grad_in(input_shape_);
  for (std::size_t k = 0; k < argmax_.size(); ++k) grad_in[argmax_[k]] += grad_out[k];
  return grad_in;
}

// ---------------------------------------------------------------- Dense

template <typename Real>
Dense<Real>::Dense(const std::string& name, std::size_t in_features, std::size_t out_features,
                   Rng& init)
    : weight(name + ".weight", Tensor<Real>({out_features, in_features})),
      bias(name + ".bias", Tensor<Real>({out_features})),
      in_(in_features),
      out_(out_features) {
  glorot_uniform(weight.value, in_features, out_features, init);
}

template <typename Real>
Tensor<Real> Dense<Real>::forward(const Tensor<Real>& input) {
  const bool vector_input = input.rank() == 1;
  const std::size_t cols = vector_input ? input.dim(0) : input.rank() == 2 ? input.dim(1) : 0;
  if (cols != in_) {
    throw DimensionError("dense expects " + std::to_string(in_) + " input features, got shape " +
                         shape_str(input.shape()));
  }
  const std::size_t rows = vector_input ? 1 : input.dim(0);
  Tensor<Real> out(vector_input ? Shape{out_} : Shape{rows, out_});
  ConstMatMap<Real> x(input.ptr(), rows, in_);
  ConstMatMap<Real> w(weight.value.ptr(), out_, in_);
  MatMap<Real> y(out.ptr(), rows, out_);
  y.noalias() = x * w.transpose();
  y.rowwise() += ConstRowVecMap<Real>(bias.value.ptr(), out_);
  input_ = input;
  return out;
}

template <typename Real>
Tensor<Real> Dense<Real>::backward(const Tensor<Real>& grad_out) {
  if (!input_) throw StateError("dense backward called before forward");
  const std::size_t rows = input_->rank() == 1 ? 1 : input_->dim(0);
  if (grad_out.size() != rows * out_) {
    throw DimensionError("dense backward: gradient shape " + shape_str(grad_out.shape()));
  }
  ConstMatMap<Real> x(input_->ptr(), rows, in_);
  ConstMatMap<Real> gy(grad_out.ptr(), rows, out_);
  MatMap<Real>(weight.grad.ptr(), out_, in_).noalias() += gy.transpose() * x;
  RowVecMap<Real>(bias.grad.ptr(), out_) += gy.colwise().sum();
  Tensor<Real> grad_in(input_->shape());
  ConstMatMap<Real> w(weight.value.ptr(), out_, in_);
  MatMap<Real>(grad_in.ptr(), rows, in_).noalias() = gy * w;
  return grad_in;
}

// ---------------------------------------------------------------- Dropout

template <typename Real>
Dropout<Real>::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
}

template <typename Real>
Tensor<Real> Dropout<Real>::forward(const Tensor<Real>& input, Mode mode, Rng& rng) {
  ran_ = true;
  passthrough_ = mode == Mode::Infer || rate_ == 0.0;
  if (passthrough_) {
    mask_.reset();
    return input;
  }
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate_));
  std::vector<Real> mask(input.size());
  Tensor<Real> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    mask[i] = rng.uniform() < rate_ ? Real(0) : keep_scale;
    out[i] = input[i] * mask[i];
  }
  mask_ = std::move(mask);
  return out;
}

template <typename Real>
Tensor<Real> Dropout<Real>::backward(const Tensor<Real>& grad_out) {
  if (!ran_) throw StateError("dropout backward called before forward");
  if (passthrough_) return grad_out;
  if (grad_out.size() != mask_->size()) {
    throw DimensionError("dropout backward: gradient shape " + shape_str(grad_out.shape()));
  }
  Tensor<Real> grad_in(grad_out.shape());
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[i] = grad_out[i] * (*mask_)[i];
  return grad_in;
}

// ---------------------------------------------------------------- sequences

std::size_t SeqLayout::total() const {
  std::size_t t = 0;
  for (auto l : lengths) t += l;
  return t;
}

std::size_t SeqLayout::offset(std::size_t seq) const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < seq; ++i) t += lengths[i];
  return t;
}

template <typename Real>
Tensor<Real> reverse_sequences(const Tensor<Real>& packed, const SeqLayout& layout) {
  Tensor<Real> out(packed.shape());
  const std::size_t width = packed.row_size();
  std::size_t offset = 0;
  for (std::size_t len : layout.lengths) {
    for (std::size_t t = 0; t < len; ++t) {
      std::copy_n(packed.row(offset + t), width, out.row(offset + len - 1 - t));
    }
    offset += len;
  }
  return out;
}

template <typename Real>
Tensor<Real> concat_columns(const std::vector<const Tensor<Real>*>& parts) {
  if (parts.empty()) throw DimensionError("concat_columns needs at least one part");
  const std::size_t rows = parts.front()->dim(0);
  std::size_t width = 0;
  for (const auto* p : parts) {
    if (p->rank() != 2 || p->dim(0) != rows) {
      throw DimensionError("concat_columns: incompatible part " + shape_str(p->shape()));
    }
    width += p->dim(1);
  }
  Tensor<Real> out({rows, width});
  for (std::size_t r = 0; r < rows; ++r) {
    Real* dst = out.row(r);
    for (const auto* p : parts) dst = std::copy_n(p->row(r), p->dim(1), dst);
  }
  return out;
}

template <typename Real>
std::vector<Tensor<Real>> split_columns(const Tensor<Real>& whole,
                                        const std::vector<std::size_t>& widths) {
  std::size_t total = 0;
  for (auto w : widths) total += w;
  if (whole.rank() != 2 || whole.dim(1) != total) {
    throw DimensionError("split_columns: shape " + shape_str(whole.shape()) +
                         " does not match widths");
  }
  const std::size_t rows = whole.dim(0);
  std::vector<Tensor<Real>> parts;
  for (auto w : widths) parts.emplace_back(Shape{rows, w});
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* src = whole.row(r);
    for (auto& p : parts) {
      std::copy_n(src, p.dim(1), p.row(r));
      src += p.dim(1);
    }
  }
  return parts;
}

// ---------------------------------------------------------------- Lstm

template <typename Real>
Lstm<Real>::Lstm(const std::string& name, std::size_t input_size, std::size_t hidden_size,
                 Rng& init)
    : kernel(name + ".kernel", Tensor<Real>({input_size, 4 * hidden_size})),
      recurrent(name + ".recurrent", Tensor<Real>({hidden_size, 4 * hidden_size})),
      bias(name + ".bias", Tensor<Real>({4 * hidden_size})),
      input_size_(input_size),
      hidden_(hidden_size) {
  glorot_uniform(kernel.value, input_size, 4 * hidden_size, init);
  glorot_uniform(recurrent.value, hidden_size, 4 * hidden_size, init);
  for (std::size_t j = hidden_size; j < 2 * hidden_size; ++j) bias.value[j] = Real(1);
}

template <typename Real>
Tensor<Real> Lstm<Real>::forward(const Tensor<Real>& input, const SeqLayout& layout) {
  if (input.rank() != 2 || input.dim(1) != input_size_) {
    throw DimensionError("lstm expects [T, " + std::to_string(input_size_) + "], got " +
                         shape_str(input.shape()));
  }
  if (layout.total() != input.dim(0)) {
    throw DimensionError("lstm layout covers " + std::to_string(layout.total()) +
                         " rows but input has " + std::to_string(input.dim(0)));
  }
  for (auto len : layout.lengths) {
    if (len == 0) throw DimensionError("lstm sequences need T >= 1");
  }
  const std::size_t rows = input.dim(0);
  const std::size_t h4 = 4 * hidden_;
  const std::size_t H = hidden_;
  gates_ = Tensor<Real>({rows, h4});
  cells_ = Tensor<Real>({rows, H});
  hidden_states_ = Tensor<Real>({rows, H});
  cell_tanh_ = Tensor<Real>({rows, H});

  MatMap<Real> z(gates_.ptr(), rows, h4);
  z.noalias() = ConstMatMap<Real>(input.ptr(), rows, input_size_) *
                ConstMatMap<Real>(kernel.value.ptr(), input_size_, h4);
  z.rowwise() += ConstRowVecMap<Real>(bias.value.ptr(), h4);
  ConstMatMap<Real> u(recurrent.value.ptr(), H, h4);

  std::size_t offset = 0;
  for (std::size_t len : layout.lengths) {
    for (std::size_t t = 0; t < len; ++t) {
      const std::size_t r = offset + t;
      Real* g = gates_.row(r);
      if (t > 0) {
        RowVecMap<Real>(g, h4).noalias() +=
            ConstRowVecMap<Real>(hidden_states_.row(r - 1), H) * u;
      }
      const Real* c_prev = t > 0 ? cells_.row(r - 1) : nullptr;
      Real* c = cells_.row(r);
      Real* h = hidden_states_.row(r);
      Real* ct = cell_tanh_.row(r);
      for (std::size_t j = 0; j < H; ++j) {
        const Real i_g = sigmoid(g[j]);
        const Real f_g = sigmoid(g[H + j]);
        const Real c_g = std::tanh(g[2 * H + j]);
        const Real o_g = sigmoid(g[3 * H + j]);
        g[j] = i_g;
        g[H + j] = f_g;
        g[2 * H + j] = c_g;
        g[3 * H + j] = o_g;
        c[j] = (c_prev ? f_g * c_prev[j] : Real(0)) + i_g * c_g;
        ct[j] = std::tanh(c[j]);
        h[j] = o_g * ct[j];
      }
    }
    offset += len;
  }
  input_ = input;
  layout_ = layout;
  last_only_ = false;
  return hidden_states_;
}

template <typename Real>
Tensor<Real> Lstm<Real>::backward(const Tensor<Real>& grad_out) {
  if (!input_) throw StateError("lstm backward called before forward");
  const std::size_t rows = input_->dim(0);
  const std::size_t H = hidden_;
  const std::size_t h4 = 4 * H;
  if (grad_out.shape() != Shape{rows, H}) {
    throw DimensionError("lstm backward: gradient shape " + shape_str(grad_out.shape()));
  }
  Tensor<Real> dz({rows, h4});
  ConstMatMap<Real> u(recurrent.value.ptr(), H, h4);
  std::vector<Real> dh_next(H), dc_next(H), dh(H);
  std::size_t offset = 0;
  for (std::size_t len : layout_.lengths) {
    std::fill(dh_next.begin(), dh_next.end(), Real(0));
    std::fill(dc_next.begin(), dc_next.end(), Real(0));
    for (std::size_t step = len; step-- > 0;) {
      const std::size_t r = offset + step;
      const Real* g = gates_.row(r);
      const Real* ct = cell_tanh_.row(r);
      const Real* c_prev = step > 0 ? cells_.row(r - 1) : nullptr;
      const Real* go = grad_out.row(r);
      Real* d = dz.row(r);
      for (std::size_t j = 0; j < H; ++j) {
        const Real i_g = g[j], f_g = g[H + j], c_g = g[2 * H + j], o_g = g[3 * H + j];
        const Real dh_j = go[j] + dh_next[j];
        const Real dc = dh_j * o_g * (Real(1) - ct[j] * ct[j]) + dc_next[j];
        d[j] = dc * c_g * i_g * (Real(1) - i_g);
        d[H + j] = (c_prev ? dc * c_prev[j] : Real(0)) * f_g * (Real(1) - f_g);
        d[2 * H + j] = dc * i_g * (Real(1) - c_g * c_g);
        d[3 * H + j] = dh_j * ct[j] * o_g * (Real(1) - o_g);
        dc_next[j] = dc * f_g;
      }
      RowVecMap<Real>(dh_next.data(), H).noalias() = ConstRowVecMap<Real>(d, h4) * u.transpose();
    }
    offset += len;
  }

  // Parameter gradients in bulk.
  ConstMatMap<Real> dzm(dz.ptr(), rows, h4);
  ConstMatMap<Real> x(input_->ptr(), rows, input_size_);
  MatMap<Real>(kernel.grad.ptr(), input_size_, h4).noalias() += x.transpose() * dzm;
  RowVecMap<Real>(bias.grad.ptr(), h4) += dzm.colwise().sum();
  MatMap<Real> du(recurrent.grad.ptr(), H, h4);
  offset = 0;
  for (std::size_t len : layout_.lengths) {
    if (len > 1) {
      du.noalias() += ConstMatMap<Real>(hidden_states_.row(offset), len - 1, H).transpose() *
                      ConstMatMap<Real>(dz.row(offset + 1), len - 1, h4);
    }
    offset += len;
  }
  Tensor<Real> grad_in(input_->shape());
  MatMap<Real>(grad_in.ptr(), rows, input_size_).noalias() =
      dzm * ConstMatMap<Real>(kernel.value.ptr(), input_size_, h4).transpose();
  return grad_in;
}

template <typename Real>
Tensor<Real> Lstm<Real>::forward_sequence(const Tensor<Real>& input, bool return_all) {
  if (input.rank() != 2) {
    throw DimensionError("lstm_seq expects [T, N], got " + shape_str(input.shape()));
  }
  Tensor<Real> all = forward(input, SeqLayout::single(input.dim(0)));
  last_only_ = !return_all;
  if (return_all) return all;
  const std::size_t last = input.dim(0) - 1;
  return Tensor<Real>({hidden_}, std::vector<Real>(all.row(last), all.row(last) + hidden_));
}

template <typename Real>
Tensor<Real> Lstm<Real>::backward_sequence(const Tensor<Real>& grad_out) {
  if (!input_) throw StateError("lstm backward called before forward");
  if (!last_only_) return backward(grad_out);
  if (grad_out.size() != hidden_) {
    throw DimensionError("lstm backward: gradient shape " + shape_str(grad_out.shape()));
  }
  Tensor<Real> full({input_->dim(0), hidden_});
  std::copy_n(grad_out.ptr(), hidden_, full.row(input_->dim(0) - 1));
  return backward(full);
}

// ---------------------------------------------------------------- BiLstm

template <typename Real>
BiLstm<Real>::BiLstm(const std::string& name, std::size_t input_size, std::size_t hidden_size,
                     Rng& init)
    : forward_(name + ".fwd", input_size, hidden_size, init),
      backward_(name + ".bwd", input_size, hidden_size, init) {}

template <typename Real>
ParamRefs<Real> BiLstm<Real>::params() {
  auto p = forward_.params();
  auto q = backward_.params();
  p.insert(p.end(), q.begin(), q.end());
  return p;
}

template <typename Real>
Tensor<Real> BiLstm<Real>::forward(const Tensor<Real>& input, const SeqLayout& layout) {
  Tensor<Real> fwd = forward_.forward(input, layout);
  Tensor<Real> bwd =
      reverse_sequences(backward_.forward(reverse_sequences(input, layout), layout), layout);
  layout_ = layout;
  ran_ = true;
  return concat_columns<Real>({&fwd, &bwd});
}

template <typename Real>
Tensor<Real> BiLstm<Real>::backward(const Tensor<Real>& grad_out) {
  if (!ran_) throw StateError("bilstm backward called before forward");
  const std::size_t h = forward_.hidden_size();
  auto parts = split_columns(grad_out, {h, h});
  Tensor<Real> g_fwd = forward_.backward(parts[0]);
  Tensor<Real> g_bwd =
      reverse_sequences(backward_.backward(reverse_sequences(parts[1], layout_)), layout_);
  for (std::size_t i = 0; i < g_fwd.size(); ++i) g_fwd[i] += g_bwd[i];
  return g_fwd;
}

// ---------------------------------------------------------------- softmax

template <typename Real>
Tensor<Real> log_softmax_rows(const Tensor<Real>& logits) {
  if (logits.rank() != 2) {
    throw DimensionError("softmax expects [T, K], got " + shape_str(logits.shape()));
  }
  Tensor<Real> out(logits.shape());
  const std::size_t k = logits.dim(1);
  for (std::size_t r = 0; r < logits.dim(0); ++r) {
    const Real* x = logits.row(r);
    const Real m = *std::max_element(x, x + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(static_cast<double>(x[j] - m));
    const double lse = static_cast<double>(m) + std::log(s);
    Real* y = out.row(r);
    for (std::size_t j = 0; j < k; ++j) y[j] = static_cast<Real>(x[j] - lse);
  }
  return out;
}

template <typename Real>
Tensor<Real> softmax_rows(const Tensor<Real>& logits) {
  if (logits.rank() != 2) {
    throw DimensionError("softmax expects [T, K], got " + shape_str(logits.shape()));
  }
  Tensor<Real> out(logits.shape());
  const std::size_t k = logits.dim(1);
  for (std::size_t r = 0; r < logits.dim(0); ++r) {
    const Real* x = logits.row(r);
    const Real m = *std::max_element(x, x + k);
    double s = 0.0;
    Real* y = out.row(r);
    for (std::size_t j = 0; j < k; ++j) {
      const double e = std::exp(static_cast<double>(x[j] - m));
      y[j] = static_cast<Real>(e);
      s += e;
    }
    for (std::size_t j = 0; j < k; ++j) y[j] = static_cast<Real>(y[j] / s);
  }
  return out;
}

#define SIGNREC_INSTANTIATE(Real)                                                          \
  template void glorot_uniform<Real>(Tensor<Real>&, std::size_t, std::size_t, Rng&);      \
  template class Conv2d<Real>;                                                             \
  template class BatchNorm<Real>;                                                          \
  template class Relu<Real>;                                                               \
  template class MaxPool2d<Real>;                                                          \
  template class Dense<Real>;                                                              \
  template class Dropout<Real>;                                                            \
  template class Lstm<Real>;                                                               \
  template class BiLstm<Real>;                                                             \
  template Tensor<Real> reverse_sequences<Real>(const Tensor<Real>&, const SeqLayout&);   \
  template Tensor<Real> concat_columns<Real>(const std::vector<const Tensor<Real>*>&);    \
  template std::vector<Tensor<Real>> split_columns<Real>(const Tensor<Real>&,             \
                                                         const std::vector<std::size_t>&); \
  template Tensor<Real> softmax_rows<Real>(const Tensor<Real>&);                          \
  template Tensor<Real> log_softmax_rows<Real>(const Tensor<Real>&);

SIGNREC_INSTANTIATE(float)
SIGNREC_INSTANTIATE(double)

#undef SIGNREC_INSTANTIATE

}  // namespace signrec::nn
