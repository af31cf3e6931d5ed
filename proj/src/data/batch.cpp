#include "signrec/data/batch.hpp"

#include <algorithm>
#include <numeric>

#include "signrec/errors.hpp"
#include "signrec/rng.hpp"

namespace signrec::data {

ctc::Labeling Batch::target(std::size_t i) const {
  const auto begin = targets.begin() + static_cast<std::ptrdiff_t>(i * padded_targets);
  return ctc::Labeling(begin, begin + static_cast<std::ptrdiff_t>(target_lengths.at(i)));
}

namespace {

// Copies the first `frames` rows of src ([T, row]) into sample b of dst ([B, Tpad, row]).
void copy_rows(nn::Tensor<float>& dst, std::size_t b, std::size_t padded, const nn::Tensor<float>& src,
               std::size_t frames) {
  const std::size_t row = src.size() / src.dim(0);
  std::copy_n(src.ptr(), frames * row, dst.ptr() + b * padded * row);
}

nn::Shape with_batch(std::size_t batch, std::size_t frames, const nn::Shape& per_frame) {
  nn::Shape s{batch, frames};
  s.insert(s.end(), per_frame.begin() + 1, per_frame.end());
  return s;
}

}  // namespace

Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices, std::size_t min_frames) {
  if (indices.empty()) throw InputError("cannot build an empty batch");
  Batch b;
  b.kind = ds.options().kind;
  std::vector<const Sample*> samples;
  for (std::size_t i : indices) {
    samples.push_back(&ds.sample(i));
    if (std::find(b.ids.begin(), b.ids.end(), samples.back()->id) != b.ids.end()) {
      throw InputError("sample \"" + samples.back()->id + "\" appears twice in a batch");
    }
    b.ids.push_back(samples.back()->id);
    b.input_lengths.push_back(samples.back()->frames);
    b.target_lengths.push_back(samples.back()->target.size());
  }
  const std::size_t B = samples.size();
  b.padded_frames = std::max(min_frames, *std::max_element(b.input_lengths.begin(), b.input_lengths.end()));
  b.padded_targets = *std::max_element(b.target_lengths.begin(), b.target_lengths.end());
  b.targets.assign(B * b.padded_targets, -1);
  for (std::size_t i = 0; i < B; ++i) {
    std::copy(samples[i]->target.begin(), samples[i]->target.end(), b.targets.begin() + i * b.padded_targets);
  }
  const std::size_t T = b.padded_frames;

  if (b.kind == InputKind::Cues) {
    const auto& first = samples.front()->cues;
    for (cues::Hand h : {cues::Hand::Left, cues::Hand::Right}) {
      HandBatch& hb = h == cues::Hand::Left ? b.left : b.right;
      const auto& proto = first.hand(h);
      hb.images = nn::Tensor<float>(with_batch(B, T, proto.images.shape()));
      hb.displacement = nn::Tensor<float>(with_batch(B, T, proto.displacement.shape()));
      hb.location = nn::Tensor<float>(with_batch(B, T, proto.location.shape()));
      for (std::size_t i = 0; i < B; ++i) {
        const auto& hc = samples[i]->cues.hand(h);
        if (hc.images.shape()[2] != proto.images.shape()[2]) {
          throw DimensionError("skeleton image size differs within a batch");
        }
        copy_rows(hb.images, i, T, hc.images, samples[i]->frames);
        copy_rows(hb.displacement, i, T, hc.displacement, samples[i]->frames);
        copy_rows(hb.location, i, T, hc.location, samples[i]->frames);
      }
    }
  } else {
    const std::size_t S = samples.front()->scene_side;
    b.frames = nn::Tensor<float>({B, T, 1, S, S});
    for (std::size_t i = 0; i < B; ++i) {
      if (samples[i]->scene_side != S) throw DimensionError("frame size differs within a batch");
      std::transform(samples[i]->scene.begin(), samples[i]->scene.end(), b.frames.ptr() + i * T * S * S,
                     [](std::uint8_t v) { return static_cast<float>(v); });
    }
  }
  return b;
}

BatchStream::BatchStream(const Dataset& ds, std::size_t batch_size, std::uint64_t seed, bool shuffle)
    : ds_(&ds), batch_size_(batch_size), seed_(seed), shuffle_(shuffle) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
}

std::size_t BatchStream::batches_per_epoch() const { return (ds_->size() + batch_size_ - 1) / batch_size_; }

std::vector<std::size_t> BatchStream::epoch_order(std::size_t epoch) const {
  std::vector<std::size_t> order(ds_->size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle_) {
    Rng rng(seed_ + epoch);
    rng.shuffle(std::span<std::size_t>(order));
  }
  return order;
}

std::vector<std::vector<std::size_t>> BatchStream::epoch_batches(std::size_t epoch) const {
  const auto order = epoch_order(epoch);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += batch_size_) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + batch_size_)));
  }
  return out;
}

void BatchStream::begin_epoch(std::size_t epoch) {
  pending_ = epoch_batches(epoch);
  cursor_ = 0;
}

bool BatchStream::next(Batch& out) {
  if (cursor_ >= pending_.size()) return false;
  out = make_batch(*ds_, pending_[cursor_++]);
  return true;
}

}  // namespace signrec::data
