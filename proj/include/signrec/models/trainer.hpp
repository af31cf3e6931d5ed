#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "signrec/data/batch.hpp"
#include "signrec/models/checkpoint.hpp"
#include "signrec/nn/optim.hpp"

namespace signrec::models {

struct EpochRecord {
  std::size_t epoch = 0;  // from 1
  double train_loss = 0.0;  // mean per-sample CTC loss over the epoch
  double dev_wer = 0.0;     // percent; NaN without a dev set
  std::size_t steps = 0;    // optimizer steps so far

  bool operator==(const EpochRecord&) const = default;
};

struct FitOptions {
  // learning rate, Adam moments, batch size, epochs, clipping, seed. Dropout
  // and L2 are taken from the model config.
  nn::TrainConfig train;
  std::size_t beam_size = 8;  // dev decoding
  std::size_t workers = 1;    // dev decoding and sample loading
  // Stop after the epoch during which this many seconds have elapsed; 0 = off.
  double time_budget_seconds = 0.0;
  std::ostream* log = nullptr;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
  std::vector<EpochRecord> epochs;
  std::vector<std::string> skipped;  // ids with infeasible targets
  std::size_t best_epoch = 0;
  double best_dev_wer = 0.0;
  Checkpoint best;
  std::size_t steps = 0;
};

// One Adam step on the mean CTC loss of `batch` plus L2. Returns the mean CTC
// loss before the update. Every target must be feasible.
double train_step(Model<float>& model, const data::Batch& batch, nn::Adam<float>& adam, std::size_t step);

// Trains on `train`, scores `dev` after every epoch and keeps the checkpoint
// with the lowest dev WER (earliest on ties), which is also restored into
// `model` on return. Samples whose targets need more frames than they have
// are skipped with a warning; InputError if none remain.
FitResult fit(Model<float>& model, const data::Dataset& train, const data::Dataset& dev, const FitOptions& options);

}  // namespace signrec::models
