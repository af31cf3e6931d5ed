#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "signrec/data/dataset.hpp"
#include "signrec/nn/tensor.hpp"

namespace signrec::data {

struct HandBatch {
  nn::Tensor<float> images;        // [B, T, 1, S, S]
  nn::Tensor<float> displacement;  // [B, T, 2]
  nn::Tensor<float> location;      // [B, T, 3]
};

// Samples padded to the batch's longest input and target.
struct Batch {
  InputKind kind = InputKind::Cues;
  std::vector<std::string> ids;
  std::vector<std::size_t> input_lengths;
  std::vector<int> targets;  // [B, U] padded with -1
  std::vector<std::size_t> target_lengths;
  std::size_t padded_frames = 0;
  std::size_t padded_targets = 0;

  HandBatch left, right;     // InputKind::Cues
  nn::Tensor<float> frames;  // InputKind::Frames: [B, T, 1, S, S]

  std::size_t size() const { return ids.size(); }
  ctc::Labeling target(std::size_t i) const;
  const HandBatch& hand(cues::Hand h) const { return h == cues::Hand::Left ? left : right; }
};

// Builds one batch from the given dataset indices. `min_frames` forces extra
// padding beyond the longest sample.
Batch make_batch(const Dataset& ds, const std::vector<std::size_t>& indices, std::size_t min_frames = 0);

// Epoch-wise batching. With shuffling, epoch e visits the samples in a
// permutation drawn from seed + e; otherwise in manifest order.
class BatchStream {
 public:
  BatchStream(const Dataset& ds, std::size_t batch_size, std::uint64_t seed, bool shuffle = true);

  std::size_t batches_per_epoch() const;
  std::vector<std::size_t> epoch_order(std::size_t epoch) const;
  std::vector<std::vector<std::size_t>> epoch_batches(std::size_t epoch) const;

  void begin_epoch(std::size_t epoch);
  bool next(Batch& out);

 private:
  const Dataset* ds_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  bool shuffle_;
  std::vector<std::vector<std::size_t>> pending_;
  std::size_t cursor_ = 0;
};

}  // namespace signrec::data
