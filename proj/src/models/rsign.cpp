#include "signrec/errors.hpp"
#include "signrec/models/model.hpp"

namespace signrec::models {

namespace {

using nn::Tensor;

// Per-frame CNN -> dense layers -> LSTM over all frames -> per-frame scores.
template <typename Real>
class RSignC final : public Model<Real> {
 public:
  RSignC(const ModelConfig& c, std::uint64_t seed) : RSignC(c, seed, Rng(derive_seed(seed, 0))) {}

  std::vector<ctc::LogitSequence<Real>> forward(const data::Batch& batch, nn::Mode mode) override {
    this->check_batch(batch);
    lengths_ = batch.input_lengths;
    Tensor<Real> x = cnn_.forward(detail::pack_valid<Real>(batch.frames, lengths_), mode);
    for (std::size_t i = 0; i < dense_.size(); ++i) x = dense_relu_[i].forward(dense_[i]->forward(x));
    x = lstm_.forward(x, nn::SeqLayout{lengths_});
    x = dropout_.forward(x, mode, this->rng_);
    return detail::unpack_logits(output_.forward(x), lengths_);
  }

  void backward(const std::vector<Tensor<Real>>& grads) override {
    if (lengths_.empty()) throw StateError("backward called before forward");
    Tensor<Real> g = lstm_.backward(dropout_.backward(output_.backward(detail::pack_grads(grads, lengths_))));
    for (std::size_t i = dense_.size(); i-- > 0;) g = dense_[i]->backward(dense_relu_[i].backward(g));
    cnn_.backward(g);
  }

 private:
  RSignC(const ModelConfig& c, std::uint64_t seed, Rng init)
      : Model<Real>(c, seed),
        cnn_("cnn", c.scene_side, c.conv, init),
        lstm_("lstm", c.dense.empty() ? c.cnn_features() : c.dense.back(), c.image_lstm, init),
        dropout_(c.dropout),
        output_("output", c.image_lstm, c.classes(), init) {
    if (c.architecture != Architecture::RSignC) throw ConfigError("config is not an RSignC config");
    std::size_t width = c.cnn_features();
    for (std::size_t i = 0; i < c.dense.size(); ++i) {
      dense_.push_back(std::make_unique<nn::Dense<Real>>("dense" + std::to_string(i), width, c.dense[i], init));
      width = c.dense[i];
    }
    dense_relu_.resize(dense_.size());
    cnn_.collect(this->params_);
    for (auto& d : dense_) detail::append(this->params_, d->params());
    detail::append(this->params_, lstm_.params());
    detail::append(this->params_, output_.params());
  }

  detail::ConvStack<Real> cnn_;
  std::vector<std::unique_ptr<nn::Dense<Real>>> dense_;
  std::vector<nn::Relu<Real>> dense_relu_;
  nn::Lstm<Real> lstm_;
  nn::Dropout<Real> dropout_;
  nn::Dense<Real> output_;
  std::vector<std::size_t> lengths_;
};

}  // namespace

template <typename Real>
std::unique_ptr<Model<Real>> build_rsign_c(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.architecture != Architecture::RSignC) throw ConfigError("build_rsign_c needs an RSignC config");
  return std::make_unique<RSignC<Real>>(config, seed);
}

template std::unique_ptr<Model<float>> build_rsign_c<float>(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<double>> build_rsign_c<double>(const ModelConfig&, std::uint64_t);

}  // namespace signrec::models
