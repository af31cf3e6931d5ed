#include "signrec/models/model.hpp"

#include <algorithm>

#include "signrec/errors.hpp"

namespace signrec::models {

template <typename Real>
Model<Real>::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)), rng_(derive_seed(seed, 1)) {
  config_.validate();
}

template <typename Real>
nn::ParamRefs<Real> Model<Real>::trainable_params() const {
  nn::ParamRefs<Real> out;
  for (auto* p : params_) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

template <typename Real>
std::size_t Model<Real>::parameter_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto* p : params_) {
    if (p->trainable || !trainable_only) n += p->value.size();
  }
  return n;
}

template <typename Real>
void Model<Real>::check_batch(const data::Batch& batch) const {
  if (batch.size() == 0) throw InputError("empty batch");
  if (batch.kind != config_.input_kind()) {
    throw InputError(std::string(to_string(config_.architecture)) + " expects " + to_string(config_.input_kind()) +
                     " input, batch holds " + to_string(batch.kind));
  }
  const nn::Tensor<float>& images = batch.kind == data::InputKind::Frames ? batch.frames : batch.left.images;
  const std::size_t side = config_.input_side();
  if (images.rank() != 5 || images.dim(3) != side || images.dim(4) != side) {
    throw DimensionError("model expects " + std::to_string(side) + "x" + std::to_string(side) +
                         " images, batch holds " + nn::shape_str(images.shape()));
  }
}

template <typename Real>
std::unique_ptr<Model<Real>> build_model(const ModelConfig& config, std::uint64_t seed) {
  return config.architecture == Architecture::RSignC ? build_rsign_c<Real>(config, seed)
                                                     : build_mcsign_c<Real>(config, seed);
}

template <typename Real>
std::vector<ctc::LogitSequence<float>> infer_logits(Model<Real>& model, const data::Batch& batch) {
  auto out = model.forward(batch, nn::Mode::Infer);
  std::vector<ctc::LogitSequence<float>> cast;
  cast.reserve(out.size());
  for (auto& s : out) cast.emplace_back(s.scores.template cast<float>(), s.input_length);
  return cast;
}

namespace detail {

template <typename Real>
ConvStack<Real>::ConvStack(const std::string& name, std::size_t side, const std::vector<ConvBlock>& blocks,
                           Rng& init) {
  std::size_t channels = 1;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& spec = blocks[i];
    const std::string n = name + ".conv" + std::to_string(i);
    Block b;
    b.conv = std::make_unique<nn::Conv2d<Real>>(n, channels, spec.maps, spec.kernel, 1, nn::Padding::Same, init);
    b.norm = std::make_unique<nn::BatchNorm<Real>>(n + ".bn", spec.maps);
    if (spec.pool > 1) b.pool = std::make_unique<nn::MaxPool2d<Real>>(spec.pool, spec.pool);
    blocks_.push_back(std::move(b));
    channels = spec.maps;
    side /= spec.pool;
  }
}

template <typename Real>
nn::Tensor<Real> ConvStack<Real>::forward(const nn::Tensor<Real>& images, nn::Mode mode) {
  nn::Tensor<Real> x = images;
  for (auto& b : blocks_) {
    x = b.relu.forward(b.norm->forward(b.conv->forward(x), mode));
    if (b.pool) x = b.pool->forward(x);
  }
  pre_flatten_ = x.shape();
  const std::size_t n = x.dim(0);
  return x.reshaped({n, x.size() / n});
}

template <typename Real>
nn::Tensor<Real> ConvStack<Real>::backward(const nn::Tensor<Real>& grad) {
  nn::Tensor<Real> g = grad.reshaped(pre_flatten_);
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
    if (it->pool) g = it->pool->backward(g);
    g = it->conv->backward(it->norm->backward(it->relu.backward(g)));
  }
  return g;
}

template <typename Real>
void ConvStack<Real>::collect(nn::ParamRefs<Real>& out) {
  for (auto& b : blocks_) {
    append(out, b.conv->params());
    append(out, b.norm->params());
  }
}

template <typename Real>
nn::Tensor<Real> pack_valid(const nn::Tensor<float>& padded, const std::vector<std::size_t>& lengths) {
  const std::size_t B = padded.dim(0), T = padded.dim(1);
  if (lengths.size() != B) throw DimensionError("length list does not match the batch");
  const std::size_t row = padded.size() / (B * T);
  std::size_t total = 0;
  for (auto len : lengths) {
    if (len == 0 || len > T) throw DimensionError("sequence length out of range");
    total += len;
  }
  nn::Shape shape(padded.shape().begin() + 1, padded.shape().end());
  shape[0] = total;
  nn::Tensor<Real> out(shape);
  Real* dst = out.ptr();
  for (std::size_t b = 0; b < B; ++b) {
    const float* src = padded.ptr() + b * T * row;
    dst = std::transform(src, src + lengths[b] * row, dst, [](float v) { return static_cast<Real>(v); });
  }
  return out;
}

template <typename Real>
std::vector<ctc::LogitSequence<Real>> unpack_logits(const nn::Tensor<Real>& packed,
                                                    const std::vector<std::size_t>& lengths) {
  const std::size_t K = packed.dim(1);
  std::vector<ctc::LogitSequence<Real>> out;
  std::size_t offset = 0;
  for (auto len : lengths) {
    nn::Tensor<Real> s({len, K});
    std::copy_n(packed.row(offset), len * K, s.ptr());
    out.emplace_back(std::move(s), len);
    offset += len;
  }
  return out;
}

template <typename Real>
nn::Tensor<Real> pack_grads(const std::vector<nn::Tensor<Real>>& grads, const std::vector<std::size_t>& lengths) {
  if (grads.size() != lengths.size()) throw DimensionError("gradient list does not match the batch");
  std::size_t total = 0;
  for (auto len : lengths) total += len;
  const std::size_t K = grads.front().dim(1);
  nn::Tensor<Real> out({total, K});
  Real* dst = out.ptr();
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].rank() != 2 || grads[i].dim(1) != K || grads[i].dim(0) < lengths[i]) {
      throw DimensionError("gradient " + std::to_string(i) + " has shape " + nn::shape_str(grads[i].shape()));
    }
    dst = std::copy_n(grads[i].ptr(), lengths[i] * K, dst);
  }
  return out;
}

template class ConvStack<float>;
template class ConvStack<double>;
template nn::Tensor<float> pack_valid<float>(const nn::Tensor<float>&, const std::vector<std::size_t>&);
template nn::Tensor<double> pack_valid<double>(const nn::Tensor<float>&, const std::vector<std::size_t>&);
template std::vector<ctc::LogitSequence<float>> unpack_logits<float>(const nn::Tensor<float>&,
                                                                     const std::vector<std::size_t>&);
template std::vector<ctc::LogitSequence<double>> unpack_logits<double>(const nn::Tensor<double>&,
                                                                       const std::vector<std::size_t>&);
template nn::Tensor<float> pack_grads<float>(const std::vector<nn::Tensor<float>>&, const std::vector<std::size_t>&);
template nn::Tensor<double> pack_grads<double>(const std::vector<nn::Tensor<double>>&,
                                               const std::vector<std::size_t>&);

}  // namespace detail

template class Model<float>;
template class Model<double>;
template std::unique_ptr<Model<float>> build_model<float>(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<double>> build_model<double>(const ModelConfig&, std::uint64_t);
template std::vector<ctc::LogitSequence<float>> infer_logits<float>(Model<float>&, const data::Batch&);
template std::vector<ctc::LogitSequence<float>> infer_logits<double>(Model<double>&, const data::Batch&);

}  // namespace signrec::models
