#include "signrec/errors.hpp"
#include "signrec/models/model.hpp"

namespace signrec::models {

namespace {

using nn::Tensor;

// Shape, movement and location branches of one hand fused by a BLSTM.
template <typename Real>
struct HandBranch {
  detail::ConvStack<Real> cnn;
  nn::Lstm<Real> image_lstm;
  nn::Lstm<Real> movement_lstm;
  nn::Lstm<Real> location_lstm;
  nn::BiLstm<Real> fusion;
  std::vector<std::size_t> widths;

  HandBranch(const std::string& name, const ModelConfig& c, Rng& init)
      : cnn(name + ".cnn", c.skeleton_side, c.conv, init),
        image_lstm(name + ".image_lstm", c.cnn_features(), c.image_lstm, init),
        movement_lstm(name + ".movement_lstm", 2, c.movement_lstm, init),
        location_lstm(name + ".location_lstm", 3, c.location_lstm, init),
        fusion(name + ".blstm", c.image_lstm + c.movement_lstm + c.location_lstm, c.hand_blstm, init),
        widths{c.image_lstm, c.movement_lstm, c.location_lstm} {}

  Tensor<Real> forward(const data::HandBatch& hb, const std::vector<std::size_t>& lengths, nn::Mode mode) {
    const nn::SeqLayout layout{lengths};
    const Tensor<Real> shape = image_lstm.forward(cnn.forward(detail::pack_valid<Real>(hb.images, lengths), mode), layout);
    const Tensor<Real> move = movement_lstm.forward(detail::pack_valid<Real>(hb.displacement, lengths), layout);
    const Tensor<Real> where = location_lstm.forward(detail::pack_valid<Real>(hb.location, lengths), layout);
    return fusion.forward(nn::concat_columns<Real>({&shape, &move, &where}), layout);
  }

  void backward(const Tensor<Real>& grad) {
    auto parts = nn::split_columns(fusion.backward(grad), widths);
    cnn.backward(image_lstm.backward(parts[0]));
    movement_lstm.backward(parts[1]);
    location_lstm.backward(parts[2]);
  }

  void collect(nn::ParamRefs<Real>& out) {
    cnn.collect(out);
    detail::append(out, image_lstm.params());
    detail::append(out, movement_lstm.params());
    detail::append(out, location_lstm.params());
    detail::append(out, fusion.params());
  }
};

template <typename Real>
class McSignC final : public Model<Real> {
 public:
  McSignC(const ModelConfig& c, std::uint64_t seed) : McSignC(c, seed, Rng(derive_seed(seed, 0))) {}

  std::vector<ctc::LogitSequence<Real>> forward(const data::Batch& batch, nn::Mode mode) override {
    this->check_batch(batch);
    lengths_ = batch.input_lengths;
    const Tensor<Real> l = left_.forward(batch.left, lengths_, mode);
    const Tensor<Real> r = right_.forward(batch.right, lengths_, mode);
    Tensor<Real> z = fusion_.forward(nn::concat_columns<Real>({&l, &r}), nn::SeqLayout{lengths_});
    z = dropout_.forward(z, mode, this->rng_);
    return detail::unpack_logits(output_.forward(z), lengths_);
  }

  void backward(const std::vector<Tensor<Real>>& grads) override {
    if (lengths_.empty()) throw StateError("backward called before forward");
    Tensor<Real> g = dropout_.backward(output_.backward(detail::pack_grads(grads, lengths_)));
    auto parts = nn::split_columns(fusion_.backward(g), {2 * this->config_.hand_blstm, 2 * this->config_.hand_blstm});
    left_.backward(parts[0]);
    right_.backward(parts[1]);
  }

 private:
  McSignC(const ModelConfig& c, std::uint64_t seed, Rng init)
      : Model<Real>(c, seed),
        left_("left", c, init),
        right_("right", c, init),
        fusion_("fusion.blstm", 4 * c.hand_blstm, c.fusion_blstm, init),
        dropout_(c.dropout),
        output_("output", 2 * c.fusion_blstm, c.classes(), init) {
    if (c.architecture != Architecture::MCSignC) throw ConfigError("config is not an MCSignC config");
    left_.collect(this->params_);
    right_.collect(this->params_);
    detail::append(this->params_, fusion_.params());
    detail::append(this->params_, output_.params());
  }

  HandBranch<Real> left_, right_;
  nn::BiLstm<Real> fusion_;
  nn::Dropout<Real> dropout_;
  nn::Dense<Real> output_;
  std::vector<std::size_t> lengths_;
};

}  // namespace

template <typename Real>
std::unique_ptr<Model<Real>> build_mcsign_c(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  if (config.architecture != Architecture::MCSignC) throw ConfigError("build_mcsign_c needs an MCSignC config");
  return std::make_unique<McSignC<Real>>(config, seed);
}

template std::unique_ptr<Model<float>> build_mcsign_c<float>(const ModelConfig&, std::uint64_t);
template std::unique_ptr<Model<double>> build_mcsign_c<double>(const ModelConfig&, std::uint64_t);

}  // namespace signrec::models
