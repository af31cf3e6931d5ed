#include "signrec/models/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "signrec/eval/report.hpp"

namespace signrec::models {

double train_step(Model<float>& model, const data::Batch& batch, nn::Adam<float>& adam, std::size_t step) {
  const auto params = model.trainable_params();
  nn::zero_grads(params);
  auto logits = model.forward(batch, nn::Mode::Train);
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<nn::Tensor<float>> grads;
  grads.reserve(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    auto r = ctc::ctc_loss(logits[i], batch.target(i));
    total += r.loss;
    for (auto& g : r.gradient.storage()) g = static_cast<float>(g * scale);
    grads.push_back(std::move(r.gradient));
  }
  model.backward(grads);
  nn::add_l2_gradient(params, model.config().l2);
  adam.step(params, step);
  return total * scale;
}

namespace {

std::string format_record(const EpochRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "epoch %zu loss %.6f dev_wer %.1f steps %zu", r.epoch, r.train_loss, r.dev_wer,
                r.steps);
  return buf;
}

}  // namespace

FitResult fit(Model<float>& model, const data::Dataset& train, const data::Dataset& dev, const FitOptions& options) {
  options.train.validate();
  if (options.train.max_epochs == 0) throw ConfigError("max_epochs must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  auto say = [&](const std::string& line) {
    if (options.log) *options.log << line << "\n" << std::flush;
  };
  const ctc::GlossVocabulary& vocab = train.vocabulary();
  if (static_cast<std::size_t>(vocab.size()) != model.config().vocab_size) {
    throw ConfigError("model expects " + std::to_string(model.config().vocab_size) +
                      " glosses, training vocabulary has " + std::to_string(vocab.size()));
  }

  FitResult result;
  train.preload(options.workers);
  dev.preload(options.workers);
  std::vector<bool> feasible(train.size());
  std::size_t usable = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& s = train.sample(i);
    const std::size_t need = ctc::required_frames(s.target);
    feasible[i] = need <= s.frames;
    if (feasible[i]) {
      ++usable;
    } else {
      result.skipped.push_back(s.id);
      say("warning: skipping " + s.id + " (target needs " + std::to_string(need) + " frames, has " +
          std::to_string(s.frames) + ")");
    }
  }
  if (usable == 0) throw InputError("no training sample has a feasible target");

  nn::Adam<float> adam(options.train);
  data::BatchStream stream(train, options.train.batch_size, options.train.seed);
  eval::EvalOptions eval_opts;
  eval_opts.beam_size = options.beam_size;
  eval_opts.batch_size = options.train.batch_size;
  eval_opts.workers = options.workers;
  const eval::LogitFn logits = [&](const data::Batch& b) { return infer_logits(model, b); };

  result.best_dev_wer = std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 0; epoch < options.train.max_epochs; ++epoch) {
    std::vector<std::size_t> order;
    for (std::size_t i : stream.epoch_order(epoch)) {
      if (feasible[i]) order.push_back(i);
    }
    double loss_sum = 0.0;
    for (std::size_t pos = 0; pos < order.size(); pos += options.train.batch_size) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                         order.begin() + static_cast<std::ptrdiff_t>(
                                                             std::min(order.size(), pos + options.train.batch_size)));
      const double loss = train_step(model, data::make_batch(train, idx), adam, ++result.steps);
      if (!std::isfinite(loss)) throw StateError("training diverged: non-finite loss at step " +
                                                 std::to_string(result.steps));
      loss_sum += loss * static_cast<double>(idx.size());
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.steps = result.steps;
    rec.dev_wer = dev.empty() ? std::numeric_limits<double>::quiet_NaN()
                              : eval::evaluate(dev, vocab, logits, eval_opts).wer_percent();
    result.epochs.push_back(rec);
    say(format_record(rec));
    if (options.on_epoch) options.on_epoch(rec);

    const double score = std::isnan(rec.dev_wer) ? 0.0 : rec.dev_wer;
    if (result.best_epoch == 0 || score < result.best_dev_wer || std::isnan(rec.dev_wer)) {
      result.best_epoch = rec.epoch;
      result.best_dev_wer = rec.dev_wer;
      result.best = capture(model, vocab, result.steps);
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options.time_budget_seconds > 0 && elapsed >= options.time_budget_seconds) {
      say("time budget reached after epoch " + std::to_string(rec.epoch));
      break;
    }
  }
  restore_into(model, result.best);
  say("best epoch " + std::to_string(result.best_epoch));
  return result;
}

}  // namespace signrec::models
